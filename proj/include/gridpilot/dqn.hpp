#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "gridworld.hpp"
#include "mlp.hpp"
#include "qlearning.hpp"

namespace gridpilot {

inline std::vector<double> encode_state(std::size_t s, std::size_t m) {
    if (s >= m) throw Error("out-of-bounds", "state " + std::to_string(s) + " not below " + std::to_string(m));
    std::vector<double> x(m, 0.0);
    x[s] = 1.0;
    return x;
}

struct Experience {
    std::size_t s = 0;
    Action a = Action::Left;
    double r = 0.0;
    std::size_t s_next = 0;
    bool done = false;

    friend bool operator==(const Experience&, const Experience&) = default;
};

// Fixed-capacity FIFO ring; pushing into a full buffer evicts the oldest entry.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw Error("invalid-hyperparams", "replay capacity must be positive");
        items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
    }

    void push(const Experience& e) {
        if (items_.size() < capacity_) {
            items_.push_back(e);
        } else {
            items_[head_] = e;
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const noexcept { return items_.size(); }
    std::size_t capacity() const noexcept { return capacity_; }

    // i = 0 is the oldest retained experience.
    const Experience& operator[](std::size_t i) const { return items_.at((head_ + i) % items_.size()); }

    // Uniform sampling with replacement.
    template <typename Rng>
    std::vector<Experience> sample(std::size_t n, Rng& rng) const {
        if (items_.empty()) throw Error("empty-buffer", "cannot sample an empty replay buffer");
        std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
        std::vector<Experience> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) out.push_back(items_[pick(rng)]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;
    std::vector<Experience> items_;
};

struct DqnHyperparams {
    double gamma = 0.9;
    double learning_rate = 0.01;
    std::size_t batch_size = 32;
    std::size_t sync_interval = 100;
    int episodes = 800;
    double epsilon_start = 1.0;
    double epsilon_end = 0.05;
    double epsilon_decay = 0.995;
    std::size_t min_buffer_before_training = 200;
    std::size_t replay_capacity = 10'000;
    std::size_t hidden = 64;
    std::optional<int> max_steps_per_episode;  // 4·m when unset
    std::uint64_t seed = 0;
    RewardSchedule rewards;

    void validate() const {
        if (!(gamma > 0.0 && gamma < 1.0)) throw Error("invalid-hyperparams", "gamma must be in (0, 1)");
        if (!(learning_rate >= 0.0 && std::isfinite(learning_rate)))
            throw Error("invalid-hyperparams", "learning_rate must be finite and non-negative");
        if (batch_size == 0 || batch_size > replay_capacity)
            throw Error("invalid-hyperparams", "need 0 < batch_size <= replay_capacity");
        if (sync_interval == 0) throw Error("invalid-hyperparams", "sync_interval must be positive");
        if (episodes <= 0) throw Error("invalid-hyperparams", "episodes must be positive");
        if (!(epsilon_end >= 0.0 && epsilon_start <= 1.0 && epsilon_end <= epsilon_start))
            throw Error("invalid-hyperparams", "need 0 <= epsilon_end <= epsilon_start <= 1");
        if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0))
            throw Error("invalid-hyperparams", "epsilon_decay must be in (0, 1]");
        if (hidden == 0) throw Error("invalid-hyperparams", "hidden width must be positive");
        if (max_steps_per_episode && *max_steps_per_episode <= 0)
            throw Error("invalid-hyperparams", "max_steps_per_episode must be positive");
        rewards.validate();
    }
};

inline std::array<double, 4> q_values(const Mlp& net, std::size_t s) {
    const auto out = net.forward(encode_state(s, net.input_size()));
    if (out.size() != 4) throw Error("dimension-mismatch", "Q-network must have 4 outputs");
    return {out[0], out[1], out[2], out[3]};
}

// One SGD step on the selected-action squared error. Returns the batch loss
// measured before the update.
inline double train_step(Mlp& main, const Mlp& target, std::span<const Experience> batch, double gamma,
                         double learning_rate) {
    if (batch.empty()) throw Error("empty-batch", "train_step needs at least one experience");
    const std::size_t m = main.input_size();
    std::vector<RegressionSample> samples;
    samples.reserve(batch.size());
    for (const auto& e : batch) {
        double y = e.r;
        if (!e.done) {
            const auto next = q_values(target, e.s_next);
            y += gamma * *std::max_element(next.begin(), next.end());
        }
        samples.push_back({encode_state(e.s, m), static_cast<std::size_t>(code(e.a)), y});
    }
    auto [loss, grad] = regression_gradient(main, samples);
    if (!std::isfinite(loss)) throw Error("diverged", "non-finite loss");
    auto params = main.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
    return loss;
}

inline double train_step(Mlp& main, const Mlp& target, std::span<const Experience> batch, const DqnHyperparams& hp) {
    return train_step(main, target, batch, hp.gamma, hp.learning_rate);
}

inline void sync_target(const Mlp& main, Mlp& target) {
    if (!main.same_architecture(target)) throw Error("architecture-mismatch", "main and target differ in shape");
    std::ranges::copy(main.parameters(), target.parameters().begin());
}

// Divergence during training; carries the statistics gathered so far.
class DivergedError : public Error {
public:
    DivergedError(const std::string& detail, TrainStats stats) : Error("diverged", detail), stats_(std::move(stats)) {}
    const TrainStats& stats() const noexcept { return stats_; }

private:
    TrainStats stats_;
};

inline std::pair<Mlp, TrainStats> train_dqn(const GridSpec& spec, const DqnHyperparams& hp) {
    require_valid(spec);
    hp.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t m = spec.state_count();
    const int max_steps = hp.max_steps_per_episode.value_or(static_cast<int>(4 * m));

    Rng rng(hp.seed);
    Mlp main = Mlp::he_uniform({m, hp.hidden, 4}, rng);
    Mlp target = main;
    ReplayBuffer buffer(hp.replay_capacity);
    TrainStats stats;
    double epsilon = hp.epsilon_start;
    std::size_t total_steps = 0;
    double last_loss = 0.0;
    std::vector<double> window_losses;

    for (int ep = 0; ep < hp.episodes; ++ep) {
        Cell cur = spec.start;
        double ret = 0.0;
        for (int t = 0; t < max_steps; ++t) {
            const std::size_t s = state_index(cur, spec);
            const Action a = epsilon_greedy(q_values(main, s), epsilon, rng);
            const StepResult r = step(spec, cur, a, hp.rewards);
            buffer.push({s, a, r.reward, state_index(r.next, spec), r.terminal});
            ret += r.reward;
            cur = r.next;
            ++total_steps;

            if (buffer.size() >= hp.min_buffer_before_training) {
                const auto batch = buffer.sample(hp.batch_size, rng);
                try {
                    last_loss = train_step(main, target, batch, hp);
                } catch (const Error& e) {
                    stats.episodes_run = ep;
                    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                    throw DivergedError(e.what(), std::move(stats));
                }
            }
            if (total_steps % hp.sync_interval == 0) sync_target(main, target);
            if (r.terminal) break;
        }
        stats.returns.push_back(ret);
        stats.epsilons.push_back(epsilon);
        window_losses.push_back(last_loss);
        epsilon = std::max(hp.epsilon_end, epsilon * hp.epsilon_decay);
    }

    stats.episodes_run = hp.episodes;
    stats.converged = detail::window_converged(window_losses);
    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(main), std::move(stats)};
}

inline PathPlan extract_path(const Mlp& net, const GridSpec& spec) {
    if (net.input_size() != spec.state_count() || net.output_size() != 4)
        throw Error("dimension-mismatch", "network shape does not match the grid");
    return greedy_rollout(spec, [&](std::size_t s) { return q_values(net, s); });
}

}  // namespace gridpilot
