#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace gridpilot {

// Direction codes are part of the wire format; never renumber.
enum class Action : int { Left = 0, Up = 1, Right = 2, Down = 3 };

inline constexpr std::array<Action, 4> kActions{Action::Left, Action::Up, Action::Right, Action::Down};

constexpr int code(Action a) noexcept { return static_cast<int>(a); }

inline Action action_from_code(int c) {
    if (c < 0 || c > 3) throw Error("invalid-direction", "direction code " + std::to_string(c));
    return static_cast<Action>(c);
}

inline const char* action_name(Action a) noexcept {
    switch (a) {
    case Action::Left: return "LEFT";
    case Action::Up: return "UP";
    case Action::Right: return "RIGHT";
    case Action::Down: return "DOWN";
    }
    return "?";
}

struct Cell {
    int row = 0;
    int col = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline std::string to_string(const Cell& c) {
    return "(" + std::to_string(c.row) + "," + std::to_string(c.col) + ")";
}

// Row 0 is the top row, so UP decrements the row.
constexpr Cell moved(Cell c, Action a) noexcept {
    switch (a) {
    case Action::Left: return {c.row, c.col - 1};
    case Action::Up: return {c.row - 1, c.col};
    case Action::Right: return {c.row, c.col + 1};
    case Action::Down: return {c.row + 1, c.col};
    }
    return c;
}

// Ordered, non-empty sequence of direction codes.
class PathPlan {
public:
    explicit PathPlan(std::vector<Action> directions) : directions_(std::move(directions)) {
        if (directions_.empty()) throw Error("empty-plan", "a path plan needs at least one direction");
    }

    static PathPlan from_codes(const std::vector<int>& codes) {
        std::vector<Action> dirs;
        dirs.reserve(codes.size());
        for (int c : codes) dirs.push_back(action_from_code(c));
        return PathPlan(std::move(dirs));
    }

    const std::vector<Action>& directions() const noexcept { return directions_; }
    std::size_t size() const noexcept { return directions_.size(); }
    Action operator[](std::size_t i) const { return directions_.at(i); }
    Action back() const noexcept { return directions_.back(); }
    auto begin() const noexcept { return directions_.begin(); }
    auto end() const noexcept { return directions_.end(); }

    std::vector<int> codes() const {
        std::vector<int> out;
        out.reserve(directions_.size());
        for (Action a : directions_) out.push_back(code(a));
        return out;
    }

    friend bool operator==(const PathPlan&, const PathPlan&) = default;

private:
    std::vector<Action> directions_;
};

struct RewardSchedule {
    double step_reward = -1.0;
    double goal_reward = 100.0;
    double obstacle_reward = -100.0;

    void validate() const {
        if (!(goal_reward > step_reward)) throw Error("invalid-rewards", "goal_reward must exceed step_reward");
        if (!(obstacle_reward < step_reward)) throw Error("invalid-rewards", "obstacle_reward must be below step_reward");
    }
};

struct GridSpec {
    int rows = 0;
    int cols = 0;
    Cell start;
    Cell goal;
    std::set<Cell> obstacles;

    bool in_bounds(const Cell& c) const noexcept { return c.row >= 0 && c.col >= 0 && c.row < rows && c.col < cols; }
    bool is_obstacle(const Cell& c) const { return obstacles.contains(c); }
    std::size_t state_count() const noexcept { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

struct StepResult {
    Cell next;
    double reward = 0.0;
    bool terminal = false;
};

struct Violation {
    std::string code;
    std::string detail;

    friend bool operator==(const Violation&, const Violation&) = default;
};

inline std::size_t state_index(const Cell& cell, const GridSpec& spec) {
    if (!spec.in_bounds(cell)) throw Error("out-of-bounds", "cell " + to_string(cell) + " is outside the grid");
    return static_cast<std::size_t>(cell.row) * static_cast<std::size_t>(spec.cols) + static_cast<std::size_t>(cell.col);
}

inline Cell cell_of_index(std::size_t index, const GridSpec& spec) {
    if (index >= spec.state_count()) throw Error("out-of-bounds", "state index " + std::to_string(index));
    const auto cols = static_cast<std::size_t>(spec.cols);
    return {static_cast<int>(index / cols), static_cast<int>(index % cols)};
}

inline StepResult step(const GridSpec& spec, const Cell& state, Action action, const RewardSchedule& rewards = {}) {
    if (!spec.in_bounds(state)) throw Error("precondition", "state " + to_string(state) + " is outside the grid");
    if (spec.is_obstacle(state)) throw Error("precondition", "state " + to_string(state) + " is an obstacle");
    if (state == spec.goal) throw Error("precondition", "state " + to_string(state) + " is the goal");

    const Cell next = moved(state, action);
    if (!spec.in_bounds(next)) return {state, rewards.step_reward, false};
    if (spec.is_obstacle(next)) return {next, rewards.obstacle_reward, true};
    if (next == spec.goal) return {next, rewards.goal_reward, true};
    return {next, rewards.step_reward, false};
}

namespace detail {

// BFS over free cells. Parents record the first (lowest-code) action that
// discovered each cell, which makes the reconstructed path deterministic.
inline std::optional<std::vector<Action>> bfs(const GridSpec& spec) {
    const std::size_t m = spec.state_count();
    std::vector<int> parent_action(m, -1);
    std::vector<bool> seen(m, false);
    std::deque<Cell> frontier{spec.start};
    seen[state_index(spec.start, spec)] = true;

    while (!frontier.empty()) {
        const Cell cur = frontier.front();
        frontier.pop_front();
        if (cur == spec.goal) break;
        for (Action a : kActions) {
            const Cell next = moved(cur, a);
            if (!spec.in_bounds(next) || spec.is_obstacle(next)) continue;
            const auto idx = state_index(next, spec);
            if (seen[idx]) continue;
            seen[idx] = true;
            parent_action[idx] = code(a);
            frontier.push_back(next);
        }
    }
    if (!seen[state_index(spec.goal, spec)]) return std::nullopt;

    std::vector<Action> path;
    for (Cell c = spec.goal; c != spec.start;) {
        const Action a = static_cast<Action>(parent_action[state_index(c, spec)]);
        path.push_back(a);
        // step back against the action
        switch (a) {
        case Action::Left: c.col += 1; break;
        case Action::Up: c.row += 1; break;
        case Action::Right: c.col -= 1; break;
        case Action::Down: c.row -= 1; break;
        }
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace detail

// Bounds and placement checks only (no reachability).
inline std::vector<Violation> structural_violations(const GridSpec& spec) {
    std::vector<Violation> out;
    if (spec.rows <= 0 || spec.cols <= 0) {
        out.push_back({"non-positive-dimensions", std::to_string(spec.rows) + "x" + std::to_string(spec.cols)});
        return out;
    }
    if (!spec.in_bounds(spec.start)) out.push_back({"start-out-of-bounds", to_string(spec.start)});
    if (!spec.in_bounds(spec.goal)) out.push_back({"goal-out-of-bounds", to_string(spec.goal)});
    for (const Cell& o : spec.obstacles)
        if (!spec.in_bounds(o)) out.push_back({"obstacle-out-of-bounds", to_string(o)});
    if (spec.start == spec.goal) out.push_back({"start-equals-goal", to_string(spec.start)});
    if (spec.is_obstacle(spec.start)) out.push_back({"start-on-obstacle", to_string(spec.start)});
    if (spec.is_obstacle(spec.goal)) out.push_back({"goal-on-obstacle", to_string(spec.goal)});
    return out;
}

inline std::vector<Violation> validate(const GridSpec& spec) {
    auto out = structural_violations(spec);
    if (out.empty() && !detail::bfs(spec))
        out.push_back({"unreachable-goal", to_string(spec.start) + " -> " + to_string(spec.goal)});
    return out;
}

namespace detail {

inline void throw_violations(const std::vector<Violation>& violations) {
    if (violations.empty()) return;
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v.code + " " + v.detail;
    throw Error("invalid-spec", msg);
}

}  // namespace detail

inline void require_valid(const GridSpec& spec) { detail::throw_violations(validate(spec)); }

// Empty when the goal is unreachable; throws on a structurally invalid spec.
inline std::optional<PathPlan> shortest_path_bfs(const GridSpec& spec) {
    detail::throw_violations(structural_violations(spec));
    auto path = detail::bfs(spec);
    if (!path) return std::nullopt;
    return PathPlan(std::move(*path));
}

// Result of folding a plan through `step` from the start cell.
struct Replay {
    std::vector<Cell> cells;  // start cell first
    bool entered_obstacle = false;
    bool bumped_boundary = false;
    bool reached_goal = false;
    std::size_t steps_taken = 0;  // stops early on a terminal transition
};

inline Replay replay_plan(const GridSpec& spec, const PathPlan& plan, const RewardSchedule& rewards = {}) {
    Replay out;
    Cell cur = spec.start;
    out.cells.push_back(cur);
    for (Action a : plan) {
        if (!spec.in_bounds(moved(cur, a))) out.bumped_boundary = true;
        const StepResult r = step(spec, cur, a, rewards);
        cur = r.next;
        out.cells.push_back(cur);
        ++out.steps_taken;
        if (r.terminal) {
            out.entered_obstacle = spec.is_obstacle(cur);
            out.reached_goal = cur == spec.goal;
            break;
        }
    }
    return out;
}

// Index of the largest value; ties go to the lowest action code.
inline Action argmax_action(const std::array<double, 4>& q) noexcept {
    int best = 0;
    for (int a = 1; a < 4; ++a)
        if (q[a] > q[best]) best = a;
    return static_cast<Action>(best);
}

// Greedy rollout from the start cell under `values(state_index)`. Shared by
// both learners; fails loudly instead of looping on an unconverged policy.
inline PathPlan greedy_rollout(const GridSpec& spec, const std::function<std::array<double, 4>(std::size_t)>& values) {
    require_valid(spec);
    const std::size_t m = spec.state_count();
    std::vector<bool> visited(m, false);
    std::vector<Action> path;
    Cell cur = spec.start;
    visited[state_index(cur, spec)] = true;

    while (cur != spec.goal) {
        if (path.size() >= m) throw Error("policy-too-long", "greedy rollout exceeded " + std::to_string(m) + " steps");
        const Action a = argmax_action(values(state_index(cur, spec)));
        path.push_back(a);
        const StepResult r = step(spec, cur, a);
        if (spec.is_obstacle(r.next))
            throw Error("policy-unsafe", "greedy policy enters obstacle " + to_string(r.next));
        cur = r.next;
        if (cur == spec.goal) break;
        const auto idx = state_index(cur, spec);
        if (visited[idx]) throw Error("policy-not-converged", "greedy policy revisits " + to_string(cur));
        visited[idx] = true;
    }
    return PathPlan(std::move(path));
}

// Uniformly random valid maze: distinct start/goal, up to `max_obstacles`
// obstacles, shortest path at least `min_path_length`. Rejection-sampled.
template <typename Rng>
GridSpec random_spec(int rows, int cols, int max_obstacles, Rng& rng, std::size_t min_path_length = 1) {
    if (min_path_length > static_cast<std::size_t>(std::max(0, rows - 1 + cols - 1)))
        throw Error("invalid-spec", "min_path_length exceeds the grid diameter");
    if (rows * cols < 2) throw Error("invalid-spec", "grid needs at least two cells");
    std::uniform_int_distribution<int> row_dist(0, rows - 1);
    std::uniform_int_distribution<int> col_dist(0, cols - 1);
    std::uniform_int_distribution<int> count_dist(0, std::max(0, max_obstacles));
    for (;;) {
        GridSpec spec{rows, cols, {row_dist(rng), col_dist(rng)}, {row_dist(rng), col_dist(rng)}, {}};
        if (spec.start == spec.goal) continue;
        const int n = count_dist(rng);
        for (int tries = 0; static_cast<int>(spec.obstacles.size()) < n && tries < 100 * (n + 1); ++tries) {
            const Cell c{row_dist(rng), col_dist(rng)};
            if (c != spec.start && c != spec.goal) spec.obstacles.insert(c);
        }
        if (!validate(spec).empty()) continue;
        if (detail::bfs(spec)->size() >= min_path_length) return spec;
    }
}

// Text rendering: one line per row, `.` free, `#` obstacle, `S` start, `G` goal.
inline std::string render_maze(const GridSpec& spec) {
    std::string out;
    for (int r = 0; r < spec.rows; ++r) {
        for (int c = 0; c < spec.cols; ++c) {
            const Cell cell{r, c};
            if (cell == spec.start) out += 'S';
            else if (cell == spec.goal) out += 'G';
            else if (spec.is_obstacle(cell)) out += '#';
            else out += '.';
        }
        out += '\n';
    }
    return out;
}

}  // namespace gridpilot
