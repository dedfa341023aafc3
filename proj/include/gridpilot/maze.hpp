#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dqn.hpp"
#include "error.hpp"
#include "gridworld.hpp"
#include "qlearning.hpp"

namespace gridpilot {

// Maze plus everything needed to train on it. Reward and seed settings are
// mirrored into both hyperparameter sets by parse_maze.
struct MazeConfig {
    std::string name;
    GridSpec spec;
    RewardSchedule rewards;
    QHyperparams qlearning;
    DqnHyperparams dqn;
    std::uint64_t seed = 0;

    void set_seed(std::uint64_t s) {
        seed = s;
        qlearning.seed = s;
        dqn.seed = s;
    }
};

// Line and column are 1-based; 0 means the position is unknown.
class MazeParseError : public Error {
public:
    MazeParseError(const std::string& detail, int line, int column)
        : Error("maze-parse", format(detail, line, column)), line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    static std::string format(const std::string& detail, int line, int column) {
        if (line <= 0) return detail;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + detail;
    }

    int line_;
    int column_;
};

namespace detail {

inline MazeConfig parse_text_maze(std::string_view text) {
    MazeConfig cfg;
    std::optional<Cell> start, goal;
    int width = -1;
    int row = 0;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        if (line.empty() || line.front() == ';') continue;  // blank or comment
        if (width < 0) width = static_cast<int>(line.size());
        if (static_cast<int>(line.size()) != width)
            throw MazeParseError("row has " + std::to_string(line.size()) + " cells, expected " + std::to_string(width),
                                 line_no, std::min(static_cast<int>(line.size()), width) + 1);
        for (int col = 0; col < width; ++col) {
            const char ch = line[static_cast<std::size_t>(col)];
            switch (ch) {
            case '.': break;
            case '#': cfg.spec.obstacles.insert({row, col}); break;
            case 'S':
                if (start) throw MazeParseError("second start cell 'S'", line_no, col + 1);
                start = Cell{row, col};
                break;
            case 'G':
                if (goal) throw MazeParseError("second goal cell 'G'", line_no, col + 1);
                goal = Cell{row, col};
                break;
            default: throw MazeParseError(std::string("unexpected character '") + ch + "'", line_no, col + 1);
            }
        }
        ++row;
    }
    if (row == 0) throw MazeParseError("maze has no rows", 0, 0);
    if (!start) throw MazeParseError("maze has no start cell 'S'", 0, 0);
    if (!goal) throw MazeParseError("maze has no goal cell 'G'", 0, 0);
    cfg.spec.rows = row;
    cfg.spec.cols = width;
    cfg.spec.start = *start;
    cfg.spec.goal = *goal;
    return cfg;
}

inline Cell cell_from_json(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw MazeParseError(std::string(what) + " must be [row, col]", 0, 0);
    return {j[0].get<int>(), j[1].get<int>()};
}

template <typename T>
void read_opt(const nlohmann::json& obj, const char* key, T& into) {
    if (!obj.contains(key)) return;
    try {
        into = obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw MazeParseError(std::string("bad value for \"") + key + "\"", 0, 0);
    }
}

inline void reject_unknown(const nlohmann::json& obj, std::initializer_list<std::string_view> known, const char* where) {
    for (const auto& [key, _] : obj.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw MazeParseError(std::string("unknown key \"") + key + "\" in " + where, 0, 0);
}

inline MazeConfig parse_json_maze(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line/column
        int line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw MazeParseError(e.what(), line, col);
    }
    if (!j.is_object()) throw MazeParseError("maze config must be a JSON object", 1, 1);
    reject_unknown(j, {"name", "rows", "cols", "start", "goal", "obstacles", "rewards", "qlearning", "dqn", "seed"},
                   "maze config");
    for (const char* key : {"rows", "cols", "start", "goal"})
        if (!j.contains(key)) throw MazeParseError(std::string("missing \"") + key + "\"", 0, 0);

    MazeConfig cfg;
    read_opt(j, "name", cfg.name);
    read_opt(j, "rows", cfg.spec.rows);
    read_opt(j, "cols", cfg.spec.cols);
    cfg.spec.start = cell_from_json(j["start"], "start");
    cfg.spec.goal = cell_from_json(j["goal"], "goal");
    if (j.contains("obstacles")) {
        if (!j["obstacles"].is_array()) throw MazeParseError("obstacles must be a list of [row, col]", 0, 0);
        for (const auto& o : j["obstacles"]) cfg.spec.obstacles.insert(cell_from_json(o, "obstacle"));
    }
    if (j.contains("rewards")) {
        const auto& r = j["rewards"];
        reject_unknown(r, {"step", "goal", "obstacle"}, "rewards");
        read_opt(r, "step", cfg.rewards.step_reward);
        read_opt(r, "goal", cfg.rewards.goal_reward);
        read_opt(r, "obstacle", cfg.rewards.obstacle_reward);
    }
    if (j.contains("qlearning")) {
        const auto& q = j["qlearning"];
        reject_unknown(q, {"alpha", "gamma", "epsilon_start", "epsilon_end", "epsilon_decay", "episodes",
                           "max_steps_per_episode"},
                       "qlearning");
        read_opt(q, "alpha", cfg.qlearning.alpha);
        read_opt(q, "gamma", cfg.qlearning.gamma);
        read_opt(q, "epsilon_start", cfg.qlearning.epsilon_start);
        read_opt(q, "epsilon_end", cfg.qlearning.epsilon_end);
        read_opt(q, "epsilon_decay", cfg.qlearning.epsilon_decay);
        read_opt(q, "episodes", cfg.qlearning.episodes);
        if (q.contains("max_steps_per_episode")) {
            int n = 0;
            read_opt(q, "max_steps_per_episode", n);
            cfg.qlearning.max_steps_per_episode = n;
        }
    }
    if (j.contains("dqn")) {
        const auto& d = j["dqn"];
        reject_unknown(d, {"gamma", "learning_rate", "batch_size", "sync_interval", "episodes", "epsilon_start",
                           "epsilon_end", "epsilon_decay", "min_buffer_before_training", "replay_capacity", "hidden",
                           "max_steps_per_episode"},
                       "dqn");
        read_opt(d, "gamma", cfg.dqn.gamma);
        read_opt(d, "learning_rate", cfg.dqn.learning_rate);
        read_opt(d, "batch_size", cfg.dqn.batch_size);
        read_opt(d, "sync_interval", cfg.dqn.sync_interval);
        read_opt(d, "episodes", cfg.dqn.episodes);
        read_opt(d, "epsilon_start", cfg.dqn.epsilon_start);
        read_opt(d, "epsilon_end", cfg.dqn.epsilon_end);
        read_opt(d, "epsilon_decay", cfg.dqn.epsilon_decay);
        read_opt(d, "min_buffer_before_training", cfg.dqn.min_buffer_before_training);
        read_opt(d, "replay_capacity", cfg.dqn.replay_capacity);
        read_opt(d, "hidden", cfg.dqn.hidden);
        if (d.contains("max_steps_per_episode")) {
            int n = 0;
            read_opt(d, "max_steps_per_episode", n);
            cfg.dqn.max_steps_per_episode = n;
        }
    }
    std::uint64_t seed = 0;
    read_opt(j, "seed", seed);
    cfg.set_seed(seed);
    return cfg;
}

}  // namespace detail

// Accepts the `.#SG` text grid (lines starting with ';' are comments) or a
// JSON config object. Structural checks only; reachability is left to validate().
inline MazeConfig parse_maze(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    MazeConfig cfg = first != std::string_view::npos && text[first] == '{' ? detail::parse_json_maze(text)
                                                                             : detail::parse_text_maze(text);
    cfg.qlearning.rewards = cfg.rewards;
    cfg.dqn.rewards = cfg.rewards;
    return cfg;
}

inline MazeConfig load_maze(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot read maze file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    MazeConfig cfg = parse_maze(ss.str());
    if (cfg.name.empty()) cfg.name = path.stem().string();
    return cfg;
}

}  // namespace gridpilot
