#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "gridworld.hpp"
#include "pathcodec.hpp"

namespace gridpilot {

enum class TurnMode { InPlace, Pivot };

struct RobotParams {
    double wheel_radius = 0.03;     // m
    double track_width = 0.12;      // m, left to right wheel pair
    double cell_length = 0.30;      // m, grid pitch
    int ticks_per_rev = 20;         // encoder disk slots
    double max_wheel_speed = 10.0;  // rad/s at duty 1.0
    double speed_noise_std = 0.02;  // relative, per wheel per step
    double dt = 0.01;               // s
    TurnMode turn_mode = TurnMode::InPlace;

    double cruise_duty = 0.5;
    double creep_duty = 0.1;  // used for the last tick of every primitive
    double left_bias = 0.0;   // constant relative speed error per side
    double right_bias = 0.0;

    double tick_angle() const noexcept { return 2.0 * std::numbers::pi / ticks_per_rev; }
    double tick_arc() const noexcept { return wheel_radius * tick_angle(); }

    long forward_ticks() const noexcept {
        return std::lround(cell_length / (2.0 * std::numbers::pi * wheel_radius) * ticks_per_rev);
    }
    // Wheel ticks for a quarter turn: each wheel travels a quarter circle of
    // radius track/2 in place, or the outer wheel a quarter circle of radius
    // track when pivoting.
    long turn_ticks() const noexcept {
        const double radius = turn_mode == TurnMode::InPlace ? track_width / 2.0 : track_width;
        return std::lround(radius * (std::numbers::pi / 2.0) / (2.0 * std::numbers::pi * wheel_radius) *
                           ticks_per_rev);
    }

    // max_wheel_speed may be zero (dead motors); everything else positive.
    void validate() const {
        if (!(wheel_radius > 0 && track_width > 0 && cell_length > 0 && ticks_per_rev > 0 && dt > 0))
            throw Error("invalid-params", "geometry, tick count and dt must be positive");
        if (!(max_wheel_speed >= 0)) throw Error("invalid-params", "max_wheel_speed must be non-negative");
        if (!(speed_noise_std >= 0)) throw Error("invalid-params", "speed_noise_std must be non-negative");
        if (!(cruise_duty > 0 && cruise_duty <= 1 && creep_duty > 0 && creep_duty <= cruise_duty))
            throw Error("invalid-params", "need 0 < creep_duty <= cruise_duty <= 1");
        if (!(max_wheel_speed * dt < tick_angle()))
            throw Error("invalid-params", "dt too large: a wheel may turn more than one tick per step");
    }
};

struct RobotPose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // radians, (−π, π]
};

inline double normalize_angle(double a) {
    a = std::remainder(a, 2.0 * std::numbers::pi);  // [−π, π]
    return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

struct MotorCommand {
    double left_duty = 0.0;
    double right_duty = 0.0;

    MotorCommand clamped() const noexcept {
        return {std::clamp(left_duty, -1.0, 1.0), std::clamp(right_duty, -1.0, 1.0)};
    }
};

struct PidGains {
    double kp = 0.8;
    double ki = 0.1;
    double kd = 0.05;
    double integral_limit = 10.0;  // ticks·s

    void validate() const {
        if (kp < 0 || ki < 0 || kd < 0) throw Error("invalid-gains", "PID gains must be non-negative");
        if (kp == 0 && ki == 0 && kd == 0) throw Error("invalid-gains", "at least one PID gain must be positive");
        if (!(integral_limit >= 0)) throw Error("invalid-gains", "integral limit must be non-negative");
    }
};

struct PidState {
    double integral = 0.0;
    double prev_error = 0.0;
    bool primed = false;  // false until the first sample; suppresses the derivative kick
};

struct PidOutput {
    double correction = 0.0;
    double p_term = 0.0;
    double i_term = 0.0;
    double d_term = 0.0;
    PidState state;
};

inline PidOutput pid_step(const PidState& state, double error, double dt, const PidGains& gains) {
    if (!(dt > 0)) throw Error("invalid-dt", "pid_step needs dt > 0");
    PidOutput out;
    out.state.integral = std::clamp(state.integral + error * dt, -gains.integral_limit, gains.integral_limit);
    const double derivative = state.primed ? (error - state.prev_error) / dt : 0.0;
    out.state.prev_error = error;
    out.state.primed = true;
    out.p_term = gains.kp * error;
    out.i_term = gains.ki * out.state.integral;
    out.d_term = gains.kd * derivative;
    out.correction = out.p_term + out.i_term + out.d_term;
    return out;
}

// Continuous wheel angles plus the encoder counters derived from them.
struct DriveState {
    RobotPose pose;
    double left_angle = 0.0;  // cumulative, rad, signed
    double right_angle = 0.0;
    long left_ticks = 0;  // floor(angle / tick_angle)
    long right_ticks = 0;
    double time = 0.0;
};

struct TickDelta {
    long left = 0;
    long right = 0;
};

// Advances one dt with piecewise-constant wheel speeds. The pose follows the
// exact arc of a differential drive.
template <typename Rng>
TickDelta physics_step(DriveState& s, const MotorCommand& raw, const RobotParams& p, Rng& rng) {
    const MotorCommand cmd = raw.clamped();
    double noise_l = 0.0, noise_r = 0.0;
    if (p.speed_noise_std > 0) {
        std::normal_distribution<double> noise(0.0, p.speed_noise_std);
        noise_l = noise(rng);
        noise_r = noise(rng);
    }
    const double wl = cmd.left_duty * p.max_wheel_speed * (1.0 + p.left_bias + noise_l);
    const double wr = cmd.right_duty * p.max_wheel_speed * (1.0 + p.right_bias + noise_r);
    const double v = p.wheel_radius * (wl + wr) / 2.0;
    const double w = p.wheel_radius * (wr - wl) / p.track_width;

    RobotPose& pose = s.pose;
    if (std::abs(w) < 1e-12) {
        pose.x += v * std::cos(pose.theta) * p.dt;
        pose.y += v * std::sin(pose.theta) * p.dt;
    } else {
        const double th1 = pose.theta + w * p.dt;
        pose.x += v / w * (std::sin(th1) - std::sin(pose.theta));
        pose.y -= v / w * (std::cos(th1) - std::cos(pose.theta));
        pose.theta = th1;
    }
    pose.theta = normalize_angle(pose.theta);

    s.left_angle += wl * p.dt;
    s.right_angle += wr * p.dt;
    s.time += p.dt;
    const long lt = static_cast<long>(std::floor(s.left_angle / p.tick_angle()));
    const long rt = static_cast<long>(std::floor(s.right_angle / p.tick_angle()));
    const TickDelta d{lt - s.left_ticks, rt - s.right_ticks};
    s.left_ticks = lt;
    s.right_ticks = rt;
    return d;
}

struct TrajectorySample {
    double t = 0.0;
    RobotPose pose;
    long left_ticks = 0;
    long right_ticks = 0;
};

// World frame: x grows with the column, y grows upward (against the row).
inline double heading_angle(Action a) noexcept {
    switch (a) {
    case Action::Right: return 0.0;
    case Action::Up: return std::numbers::pi / 2.0;
    case Action::Left: return std::numbers::pi;
    case Action::Down: return -std::numbers::pi / 2.0;
    }
    return 0.0;
}

// Executes motion primitives one at a time against the physics model.
// Primitive controllers count encoder ticks from the primitive's start.
class Simulator {
public:
    Simulator(RobotParams params, PidGains gains, std::uint64_t seed, RobotPose initial = {}, bool pid_enabled = true)
        : params_(params), gains_(gains), rng_(seed), pid_enabled_(pid_enabled) {
        params_.validate();
        gains_.validate();
        state_.pose = initial;
        state_.pose.theta = normalize_angle(initial.theta);
        record();
    }

    const DriveState& state() const noexcept { return state_; }
    const RobotParams& params() const noexcept { return params_; }
    const std::vector<TrajectorySample>& trajectory() const noexcept { return trajectory_; }

    void execute(MovePrimitive p) {
        switch (p) {
        case MovePrimitive::Forward: forward(); break;
        case MovePrimitive::TurnLeft: turn(true); break;
        case MovePrimitive::TurnRight: turn(false); break;
        }
    }

private:
    long ticks_since(double angle, double start) const {
        return static_cast<long>(std::trunc((angle - start) / params_.tick_angle()));
    }

    // Ten times the nominal duration of a primitive that needs `ticks` ticks on
    // its driving wheel. Dead motors fall back to the default wheel speed.
    long step_budget(long ticks) const {
        const double speed = params_.max_wheel_speed > 0 ? params_.max_wheel_speed : RobotParams{}.max_wheel_speed;
        const double cruise = std::max(0L, ticks - 1) * params_.tick_angle() / (params_.cruise_duty * speed);
        const double creep = params_.tick_angle() / (params_.creep_duty * speed);
        return static_cast<long>(std::ceil(10.0 * (cruise + creep) / params_.dt));
    }

    void advance(const MotorCommand& cmd, long& steps, long budget, const char* what) {
        if (++steps > budget) throw Error("primitive-stalled", std::string(what) + " exceeded its time budget");
        physics_step(state_, cmd, params_, rng_);
        record();
    }

    void forward() {
        const long target = params_.forward_ticks();
        const long budget = step_budget(target);
        const double l0 = state_.left_angle, r0 = state_.right_angle;
        PidState pid;
        long steps = 0;
        for (;;) {
            const long cl = ticks_since(state_.left_angle, l0);
            const long cr = ticks_since(state_.right_angle, r0);
            const double mean = 0.5 * static_cast<double>(cl + cr);
            if (mean >= static_cast<double>(target)) return;
            const double base = static_cast<double>(target) - mean <= 1.0 ? params_.creep_duty : params_.cruise_duty;
            double c = 0.0;
            if (pid_enabled_) {
                const PidOutput out = pid_step(pid, static_cast<double>(cl - cr), params_.dt, gains_);
                pid = out.state;
                // neither side may reverse, so the mean duty stays at base
                c = std::clamp(out.correction, -base, base);
            }
            advance({base - c, base + c}, steps, budget, "FORWARD");
        }
    }

    void turn(bool left) {
        const long target = params_.turn_ticks();
        const long budget = step_budget(target);
        const double l0 = state_.left_angle, r0 = state_.right_angle;
        long steps = 0;
        const char* what = left ? "TURN_LEFT" : "TURN_RIGHT";
        for (;;) {
            const long cl = std::abs(ticks_since(state_.left_angle, l0));
            const long cr = std::abs(ticks_since(state_.right_angle, r0));
            if (params_.turn_mode == TurnMode::InPlace) {
                const double mean = 0.5 * static_cast<double>(cl + cr);
                if (mean >= static_cast<double>(target)) return;
                const double base =
                    static_cast<double>(target) - mean <= 1.0 ? params_.creep_duty : params_.cruise_duty;
                advance(left ? MotorCommand{-base, base} : MotorCommand{base, -base}, steps, budget, what);
            } else {
                // The halted side is the inside of the turn.
                const long driven = left ? cr : cl;
                if (driven >= target) return;
                const double base = target - driven <= 1 ? params_.creep_duty : params_.cruise_duty;
                advance(left ? MotorCommand{0.0, base} : MotorCommand{base, 0.0}, steps, budget, what);
            }
        }
    }

    void record() {
        trajectory_.push_back({state_.time, state_.pose, state_.left_ticks, state_.right_ticks});
    }

    RobotParams params_;
    PidGains gains_;
    std::mt19937_64 rng_;
    bool pid_enabled_;
    DriveState state_;
    std::vector<TrajectorySample> trajectory_;
};

struct DriveResult {
    std::vector<TrajectorySample> trajectory;
    RobotPose final_pose;
    Cell final_cell;
    Action final_heading = Action::Up;  // commanded heading after the last completed primitive
    bool success = false;
    bool stalled = false;
    std::string error;
    std::size_t primitives_executed = 0;
    double sim_time = 0.0;
    double wall_time = 0.0;
};

inline RobotPose cell_pose(const Cell& c, const RobotParams& p, Action heading) {
    return {c.col * p.cell_length, -c.row * p.cell_length, heading_angle(heading)};
}

// Nearest grid cell to a world position.
inline Cell cell_at(const RobotPose& pose, const RobotParams& p) {
    return {static_cast<int>(std::lround(-pose.y / p.cell_length)),
            static_cast<int>(std::lround(pose.x / p.cell_length))};
}

// Called between primitives; a returned plan replaces the remaining moves and
// is interpreted as the route from the robot's current cell.
using PlanUpdateSource = std::function<std::optional<PathPlan>()>;

inline DriveResult execute_plan(const GridSpec& spec, const PathPlan& plan, Action initial_heading,
                                const RobotParams& params, const PidGains& gains, std::uint64_t seed,
                                const PlanUpdateSource& updates = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    Simulator sim(params, gains, seed, cell_pose(spec.start, params, initial_heading));
    DriveResult result;
    Action heading = initial_heading;
    auto moves = decode_moves(plan, heading);

    try {
        for (std::size_t i = 0; i < moves.size(); ++i) {
            sim.execute(moves[i]);
            heading = turned(heading, moves[i]);
            ++result.primitives_executed;
            if (updates) {
                if (auto next = updates()) {
                    moves = decode_moves(*next, heading);
                    i = static_cast<std::size_t>(-1);
                }
            }
        }
    } catch (const Error& e) {
        if (e.code() != "primitive-stalled") throw;
        result.stalled = true;
        result.error = e.what();
    }

    result.trajectory = sim.trajectory();
    result.final_pose = sim.state().pose;
    result.final_cell = cell_at(result.final_pose, params);
    result.final_heading = heading;
    result.success = !result.stalled && result.final_cell == spec.goal;
    result.sim_time = sim.state().time;
    result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

inline void write_trajectory_csv(std::ostream& os, std::span<const TrajectorySample> trajectory) {
    os << "t,x,y,theta,left_ticks,right_ticks\n";
    for (const auto& s : trajectory)
        os << s.t << ',' << s.pose.x << ',' << s.pose.y << ',' << s.pose.theta << ',' << s.left_ticks << ','
           << s.right_ticks << '\n';
}

inline nlohmann::json drive_summary(const DriveResult& r) {
    nlohmann::json j;
    j["final_cell"] = {r.final_cell.row, r.final_cell.col};
    j["success"] = r.success;
    j["stalled"] = r.stalled;
    j["primitive_count"] = r.primitives_executed;
    j["sim_time_s"] = r.sim_time;
    j["wall_time_s"] = r.wall_time;
    j["final_pose"] = {{"x", r.final_pose.x}, {"y", r.final_pose.y}, {"theta", r.final_pose.theta}};
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

}  // namespace gridpilot
