#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "gridworld.hpp"

namespace gridpilot {

using Rng = std::mt19937_64;

// states x 4 action values, row-major by state index.
class QTable {
public:
    explicit QTable(std::size_t states) : states_(states), values_(states * 4, 0.0) {}

    std::size_t states() const noexcept { return states_; }

    double operator()(std::size_t s, Action a) const { return values_.at(s * 4 + static_cast<std::size_t>(code(a))); }
    double& at(std::size_t s, Action a) { return values_.at(s * 4 + static_cast<std::size_t>(code(a))); }

    std::array<double, 4> row(std::size_t s) const {
        check_state(s);
        return {values_[s * 4], values_[s * 4 + 1], values_[s * 4 + 2], values_[s * 4 + 3]};
    }

    double max_value(std::size_t s) const {
        const auto r = row(s);
        return std::max(std::max(r[0], r[1]), std::max(r[2], r[3]));
    }

    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const QTable&, const QTable&) = default;

    void check_state(std::size_t s) const {
        if (s >= states_) throw Error("out-of-bounds", "state index " + std::to_string(s));
    }

private:
    std::size_t states_;
    std::vector<double> values_;
};

struct QHyperparams {
    double alpha = 0.1;
    double gamma = 0.9;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay = 0.995;
    int episodes = 500;
    std::optional<int> max_steps_per_episode;  // 4·m when unset
    std::uint64_t seed = 0;
    RewardSchedule rewards;

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("invalid-hyperparams", "alpha must be in (0, 1]");
        if (!(gamma > 0.0 && gamma < 1.0)) throw Error("invalid-hyperparams", "gamma must be in (0, 1)");
        if (!(epsilon_end >= 0.0 && epsilon_start <= 1.0 && epsilon_end <= epsilon_start))
            throw Error("invalid-hyperparams", "need 0 <= epsilon_end <= epsilon_start <= 1");
        if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
            throw Error("invalid-hyperparams", "epsilon_decay must be in (0, 1]");
        if (episodes <= 0) throw Error("invalid-hyperparams", "episodes must be positive");
        if (max_steps_per_episode && *max_steps_per_episode <= 0)
            throw Error("invalid-hyperparams", "max_steps_per_episode must be positive");
        rewards.validate();
    }
};

struct TrainStats {
    int episodes_run = 0;
    double wall_time = 0.0;  // seconds
    std::vector<double> returns;
    std::vector<double> epsilons;
    bool converged = false;
};

// Q(s,a) += alpha·(target − Q(s,a)); returns the magnitude of the change.
inline double bellman_update(QTable& q, std::size_t s, Action a, double reward, std::size_t s_next, bool terminal,
                             double alpha, double gamma) {
    q.check_state(s);
    q.check_state(s_next);
    if (!std::isfinite(reward) || !std::isfinite(alpha) || !std::isfinite(gamma))
        throw Error("non-finite", "bellman_update received a non-finite input");
    const double target = terminal ? reward : reward + gamma * q.max_value(s_next);
    double& cell = q.at(s, a);
    const double delta = alpha * (target - cell);
    cell += delta;
    if (!std::isfinite(cell)) throw Error("non-finite", "Q value became non-finite");
    return std::abs(delta);
}

inline double bellman_update(QTable& q, std::size_t s, Action a, double reward, std::size_t s_next, bool terminal,
                             const QHyperparams& hp) {
    return bellman_update(q, s, a, reward, s_next, terminal, hp.alpha, hp.gamma);
}

// ε-greedy over one row of values. Always consumes one uniform draw so the
// random stream does not depend on ε.
inline Action epsilon_greedy(const std::array<double, 4>& values, double epsilon, Rng& rng) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error("invalid-epsilon", std::to_string(epsilon));
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<int> pick(0, 3);
        return static_cast<Action>(pick(rng));
    }
    return argmax_action(values);
}

inline Action select_action(const QTable& q, std::size_t s, double epsilon, Rng& rng) {
    return epsilon_greedy(q.row(s), epsilon, rng);
}

namespace detail {

// A run counts as converged when no update in the final 10 episodes moved a
// value by 1e-4 or more.
inline constexpr int kConvergenceWindow = 10;
inline constexpr double kConvergenceTolerance = 1e-4;

inline bool window_converged(const std::vector<double>& max_updates) {
    if (max_updates.size() < static_cast<std::size_t>(kConvergenceWindow)) return false;
    for (auto it = max_updates.end() - kConvergenceWindow; it != max_updates.end(); ++it)
        if (*it >= kConvergenceTolerance) return false;
    return true;
}

}  // namespace detail

inline std::pair<QTable, TrainStats> train(const GridSpec& spec, const QHyperparams& hp) {
    require_valid(spec);
    hp.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t m = spec.state_count();
    const int max_steps = hp.max_steps_per_episode.value_or(static_cast<int>(4 * m));

    QTable q(m);
    TrainStats stats;
    std::vector<double> max_updates;
    Rng rng(hp.seed);
    double epsilon = hp.epsilon_start;

    for (int ep = 0; ep < hp.episodes; ++ep) {
        Cell cur = spec.start;
        double ret = 0.0;
        double max_update = 0.0;
        for (int t = 0; t < max_steps; ++t) {
            const std::size_t s = state_index(cur, spec);
            const Action a = select_action(q, s, epsilon, rng);
            const StepResult r = step(spec, cur, a, hp.rewards);
            const std::size_t s_next = state_index(r.next, spec);
            max_update = std::max(max_update, bellman_update(q, s, a, r.reward, s_next, r.terminal, hp));
            ret += r.reward;
            cur = r.next;
            if (r.terminal) break;
        }
        stats.returns.push_back(ret);
        stats.epsilons.push_back(epsilon);
        max_updates.push_back(max_update);
        epsilon = std::max(hp.epsilon_end, epsilon * hp.epsilon_decay);
    }

    stats.episodes_run = hp.episodes;
    stats.converged = detail::window_converged(max_updates);
    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(q), std::move(stats)};
}

inline PathPlan extract_path(const QTable& q, const GridSpec& spec) {
    if (q.states() != spec.state_count())
        throw Error("dimension-mismatch", "Q-table has " + std::to_string(q.states()) + " states, grid has " +
                                              std::to_string(spec.state_count()));
    return greedy_rollout(spec, [&](std::size_t s) { return q.row(s); });
}

// One line per state, four columns, round-trippable precision.
inline void write_qtable(std::ostream& os, const QTable& q) {
    const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t s = 0; s < q.states(); ++s) {
        const auto r = q.row(s);
        os << r[0] << ' ' << r[1] << ' ' << r[2] << ' ' << r[3] << '\n';
    }
    os.precision(old_precision);
}

inline void write_train_stats_csv(std::ostream& os, const TrainStats& stats) {
    os << "episode,return,epsilon\n";
    for (std::size_t i = 0; i < stats.returns.size(); ++i)
        os << i << ',' << stats.returns[i] << ',' << (i < stats.epsilons.size() ? stats.epsilons[i] : 0.0) << '\n';
}

}  // namespace gridpilot
