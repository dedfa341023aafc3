#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "compare.hpp"
#include "dqn.hpp"
#include "error.hpp"
#include "gridworld.hpp"
#include "maze.hpp"
#include "pathcodec.hpp"
#include "pathserver.hpp"
#include "qlearning.hpp"
#include "robotsim.hpp"

namespace gridpilot::cli {

enum ExitCode : int { kOk = 0, kInput = 2, kConvergence = 3, kNetwork = 4, kExecution = 5 };

inline bool is_policy_failure(const Error& e) {
    return e.code() == "policy-not-converged" || e.code() == "policy-unsafe" || e.code() == "policy-too-long" ||
           e.code() == "diverged";
}

inline std::string plan_to_string(const PathPlan& plan) {
    std::string s;
    for (int c : plan.codes()) s += (s.empty() ? "" : " ") + std::to_string(c);
    return s;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("io", "cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out || !(out << content)) throw Error("io", "cannot write " + p.string());
}

// Loads and validates a maze; prints problems and returns nullopt on failure.
inline std::optional<MazeConfig> load_valid_maze(const std::string& path, std::ostream& err) {
    MazeConfig cfg;
    try {
        cfg = load_maze(path);
    } catch (const Error& e) {
        err << path << ": " << e.what() << '\n';
        return std::nullopt;
    }
    const auto violations = validate(cfg.spec);
    if (violations.empty()) return cfg;
    err << path << ": invalid maze\n";
    for (const auto& v : violations) err << "  " << v.code << ' ' << v.detail << '\n';
    return std::nullopt;
}

struct PlanOptions {
    std::string maze;
    std::string algo = "q";  // q | dqn | bfs
    std::optional<std::string> out;
    std::optional<std::string> url;
    std::optional<std::uint64_t> seed;
    std::optional<int> episodes;
};

inline int cmd_plan(const PlanOptions& opt, std::ostream& out, std::ostream& err) {
    auto cfg = load_valid_maze(opt.maze, err);
    if (!cfg) return kInput;
    if (opt.seed) cfg->set_seed(*opt.seed);
    if (opt.episodes) {
        cfg->qlearning.episodes = *opt.episodes;
        cfg->dqn.episodes = *opt.episodes;
    }

    std::optional<PathPlan> plan;
    try {
        if (opt.algo == "bfs") {
            plan = shortest_path_bfs(cfg->spec);
        } else if (opt.algo == "q") {
            auto [q, stats] = train(cfg->spec, cfg->qlearning);
            out << "trained Q-learning: " << stats.episodes_run << " episodes in " << stats.wall_time
                << " s, converged=" << (stats.converged ? "yes" : "no") << '\n';
            plan = extract_path(q, cfg->spec);
        } else if (opt.algo == "dqn") {
            auto [net, stats] = train_dqn(cfg->spec, cfg->dqn);
            out << "trained DQN: " << stats.episodes_run << " episodes in " << stats.wall_time << " s\n";
            plan = extract_path(net, cfg->spec);
        } else {
            err << "unknown algorithm \"" << opt.algo << "\" (expected q, dqn or bfs)\n";
            return kInput;
        }
    } catch (const Error& e) {
        err << "planning failed: " << e.what() << '\n';
        return is_policy_failure(e) ? kConvergence : kInput;
    }

    const std::string wire = encode_wire(*plan);
    out << "plan: " << plan_to_string(*plan) << "\nlength: " << plan->size() << '\n';
    try {
        if (opt.out) {
            write_file(*opt.out, wire);
            out << "wrote " << *opt.out << '\n';
        }
        if (opt.url) {
            const auto version = put_path(*opt.url, *plan);
            out << "published to " << *opt.url << " (version " << version << ")\n";
        }
    } catch (const Error& e) {
        err << e.what() << '\n';
        return e.code() == "io" ? kInput : kNetwork;
    }
    if (!opt.out && !opt.url) out << wire << '\n';
    return kOk;
}

struct ServeOptions {
    std::optional<std::string> addr;
};

// `wait` blocks until shutdown is requested.
inline int cmd_serve(const ServeOptions& opt, std::ostream& out, std::ostream& err, const std::function<void()>& wait) {
    Endpoint ep;
    try {
        ep = resolve_endpoint(opt.addr);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kInput;
    }
    PathServer server;
    try {
        ep.port = server.start(ep);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kNetwork;
    }
    out << "serving on " << ep.to_string() << std::endl;
    wait();
    server.stop();
    out << "stopped" << std::endl;
    return kOk;
}

struct DriveOptions {
    std::string maze;
    std::optional<std::string> plan_file;
    std::optional<std::string> url;
    std::uint64_t seed = 0;
    double noise = RobotParams{}.speed_noise_std;
    std::string turn_mode = "in_place";
    std::optional<double> max_wheel_speed;
    int heading = code(Action::Up);
    std::optional<double> poll_interval;  // seconds; url source only
    std::optional<std::string> trajectory_out;
    std::optional<std::string> summary_out;
};

inline int cmd_drive(const DriveOptions& opt, std::ostream& out, std::ostream& err) {
    auto cfg = load_valid_maze(opt.maze, err);
    if (!cfg) return kInput;
    if (opt.plan_file.has_value() == opt.url.has_value()) {
        err << "drive needs exactly one plan source (--plan or --url)\n";
        return kInput;
    }

    RobotParams params;
    params.speed_noise_std = opt.noise;
    if (opt.max_wheel_speed) params.max_wheel_speed = *opt.max_wheel_speed;
    if (opt.turn_mode == "pivot") params.turn_mode = TurnMode::Pivot;
    else if (opt.turn_mode != "in_place") {
        err << "unknown turn mode \"" << opt.turn_mode << "\" (expected in_place or pivot)\n";
        return kInput;
    }
    Action heading;
    try {
        params.validate();
        heading = action_from_code(opt.heading);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kInput;
    }

    std::optional<PathPlan> plan;
    std::uint64_t version = 0;
    try {
        if (opt.plan_file) {
            plan = decode_wire(read_file(*opt.plan_file));
        } else {
            auto fetched = fetch_path(*opt.url);
            plan = std::move(fetched.plan);
            version = fetched.version;
        }
    } catch (const Error& e) {
        err << "could not obtain a plan: " << e.what() << '\n';
        const bool network = e.code() == "network" || e.code() == "no-plan" || e.code() == "http-status" ||
                             e.code() == "bad-url";
        return network ? kNetwork : kInput;
    }
    out << "plan: " << plan_to_string(*plan) << '\n';

    const Replay replay = replay_plan(cfg->spec, *plan);
    if (replay.entered_obstacle) err << "warning: plan drives into an obstacle at " << to_string(replay.cells.back()) << '\n';
    if (replay.bumped_boundary) err << "warning: plan drives off the grid\n";
    if (!replay.reached_goal) err << "warning: plan does not reach the goal on the grid\n";

    std::optional<PathPoller> poller;
    PlanUpdateSource updates;
    if (opt.url && opt.poll_interval) {
        poller.emplace(*opt.url, std::chrono::milliseconds(static_cast<long>(*opt.poll_interval * 1000.0)));
        updates = [&]() -> std::optional<PathPlan> {
            std::optional<PathPlan> latest;
            while (auto u = poller->updates().try_pop()) {
                if (u->version == version) continue;
                version = u->version;
                latest = std::move(u->plan);
            }
            if (latest) out << "adopting plan version " << version << ": " << plan_to_string(*latest) << '\n';
            return latest;
        };
    }

    const DriveResult result = execute_plan(cfg->spec, *plan, heading, params, PidGains{}, opt.seed, updates);
    if (poller) poller->stop();

    const auto summary = drive_summary(result);
    try {
        if (opt.trajectory_out) {
            std::ostringstream csv;
            write_trajectory_csv(csv, result.trajectory);
            write_file(*opt.trajectory_out, csv.str());
        }
        if (opt.summary_out) write_file(*opt.summary_out, summary.dump(2) + "\n");
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kInput;
    }
    out << summary.dump() << '\n';
    if (result.stalled) err << result.error << '\n';
    return result.success ? kOk : kExecution;
}

struct CompareOptions {
    std::optional<std::string> maze_dir;
    int generate = 0;  // number of random mazes when no directory is given
    int rows = 5;
    int cols = 5;
    int max_obstacles = 5;
    std::uint64_t generator_seed = 1;
    std::vector<std::uint64_t> seeds{0};
    std::optional<int> episodes;
    std::optional<std::string> out;
    unsigned jobs = 1;
};

inline int cmd_compare(const CompareOptions& opt, std::ostream& out, std::ostream& err) {
    std::vector<MazeConfig> mazes;
    if (opt.maze_dir) {
        std::vector<std::filesystem::path> files;
        std::error_code ec;
        for (const auto& entry : std::filesystem::directory_iterator(*opt.maze_dir, ec))
            if (entry.is_regular_file() && (entry.path().extension() == ".maze" || entry.path().extension() == ".json"))
                files.push_back(entry.path());
        if (ec) {
            err << "cannot list " << *opt.maze_dir << ": " << ec.message() << '\n';
            return kInput;
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            auto cfg = load_valid_maze(f.string(), err);
            if (!cfg) return kInput;
            mazes.push_back(std::move(*cfg));
        }
    } else if (opt.generate > 0) {
        std::mt19937_64 rng(opt.generator_seed);
        try {
            for (int i = 0; i < opt.generate; ++i) {
                MazeConfig cfg;
                cfg.spec = random_spec(opt.rows, opt.cols, opt.max_obstacles, rng);
                cfg.name = "generated-" + std::to_string(i + 1);
                mazes.push_back(std::move(cfg));
            }
        } catch (const Error& e) {
            err << e.what() << '\n';
            return kInput;
        }
    }
    if (mazes.empty()) {
        err << "compare needs at least one maze (--maze-dir or --generate)\n";
        return kInput;
    }
    if (opt.seeds.empty()) {
        err << "compare needs at least one seed\n";
        return kInput;
    }
    if (opt.episodes)
        for (auto& m : mazes) {
            m.qlearning.episodes = *opt.episodes;
            m.dqn.episodes = *opt.episodes;
        }

    const CompareReport report = run_compare(mazes, opt.seeds, opt.jobs);
    std::ostringstream csv;
    write_compare_csv(csv, report);
    try {
        if (opt.out) write_file(*opt.out, csv.str());
        else out << csv.str();
    } catch (const Error& e) {
        err << e.what() << '\n';
        return kInput;
    }
    write_bucket_summary(out, report);
    return kOk;
}

}  // namespace gridpilot::cli
