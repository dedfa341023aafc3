#include <gridpilot/robotsim.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace gridpilot;

namespace {

constexpr double kPi = std::numbers::pi;

RobotParams quiet(int ticks_per_rev = 20, double dt = 0.01) {
    RobotParams p;
    p.speed_noise_std = 0.0;
    p.ticks_per_rev = ticks_per_rev;
    p.dt = dt;
    return p;
}

double angle_diff(double a, double b) { return std::abs(normalize_angle(a - b)); }

}  // namespace

TEST(Pid, ZeroErrorGivesZeroCorrection) {
    PidState s;
    for (int i = 0; i < 50; ++i) {
        const auto out = pid_step(s, 0.0, 0.01, PidGains{});
        EXPECT_EQ(out.correction, 0.0);
        s = out.state;
    }
}

TEST(Pid, PureProportional) {
    EXPECT_DOUBLE_EQ(pid_step({}, 2.0, 0.01, {1.0, 0.0, 0.0}).correction, 2.0);
}

TEST(Pid, IntegralAccumulates) {
    const PidGains g{0.0, 0.1, 0.0};
    PidState s;
    PidOutput out;
    for (int i = 0; i < 100; ++i) {
        out = pid_step(s, 1.0, 0.01, g);
        s = out.state;
    }
    EXPECT_NEAR(out.i_term, 0.1, 1e-9);
}

TEST(Pid, IntegralClampedAndDerivative) {
    PidGains g{0.0, 1.0, 0.0, 0.5};
    PidState s;
    for (int i = 0; i < 100; ++i) s = pid_step(s, 1.0, 0.1, g).state;
    EXPECT_DOUBLE_EQ(s.integral, 0.5);

    const PidGains d{0.0, 0.0, 1.0};
    const auto first = pid_step({}, 3.0, 0.5, d);
    EXPECT_EQ(first.d_term, 0.0);
    EXPECT_DOUBLE_EQ(pid_step(first.state, 4.0, 0.5, d).d_term, 2.0);
    EXPECT_THROW(pid_step({}, 1.0, 0.0, d), Error);
}

TEST(Physics, StraightLine) {
    const RobotParams p = quiet();
    std::mt19937_64 rng(0);
    DriveState s;
    s.pose.theta = 0.7;
    physics_step(s, {0.4, 0.4}, p, rng);
    EXPECT_EQ(s.pose.theta, 0.7);
    const double d = p.wheel_radius * 0.4 * p.max_wheel_speed * p.dt;
    EXPECT_NEAR(s.pose.x, d * std::cos(0.7), 1e-12);
    EXPECT_NEAR(s.pose.y, d * std::sin(0.7), 1e-12);
}

TEST(Physics, SpinInPlace) {
    const RobotParams p = quiet();
    std::mt19937_64 rng(0);
    DriveState s;
    physics_step(s, {-0.5, 0.5}, p, rng);
    EXPECT_NEAR(s.pose.x, 0.0, 1e-15);
    EXPECT_NEAR(s.pose.y, 0.0, 1e-15);
    EXPECT_GT(s.pose.theta, 0.0);
}

TEST(Physics, ZeroDutyIsStill) {
    RobotParams p;
    std::mt19937_64 rng(0);
    DriveState s;
    s.pose = {1.0, 2.0, 0.3};
    const auto d = physics_step(s, {0.0, 0.0}, p, rng);
    EXPECT_EQ(s.pose.x, 1.0);
    EXPECT_EQ(s.pose.y, 2.0);
    EXPECT_EQ(s.pose.theta, 0.3);
    EXPECT_EQ(d.left, 0);
    EXPECT_EQ(d.right, 0);
}

TEST(Physics, ArcMatchesClosedForm) {
    const RobotParams p = quiet();
    std::mt19937_64 rng(0);
    DriveState s;
    physics_step(s, {0.2, 0.6}, p, rng);
    const double wl = 0.2 * p.max_wheel_speed, wr = 0.6 * p.max_wheel_speed;
    const double v = p.wheel_radius * (wl + wr) / 2, w = p.wheel_radius * (wr - wl) / p.track_width;
    const double R = v / w, th = w * p.dt;
    EXPECT_NEAR(s.pose.x, R * std::sin(th), 1e-15);
    EXPECT_NEAR(s.pose.y, R * (1 - std::cos(th)), 1e-15);
    EXPECT_NEAR(s.pose.theta, th, 1e-15);
}

TEST(Physics, TicksFollowCumulativeAngle) {
    RobotParams p;
    p.speed_noise_std = 0.05;
    std::mt19937_64 rng(5);
    DriveState s;
    long prev = 0;
    for (int i = 0; i < 400; ++i) {
        physics_step(s, {i < 200 ? 0.7 : -0.7, 0.3}, p, rng);
        EXPECT_EQ(s.left_ticks, static_cast<long>(std::floor(s.left_angle / p.tick_angle())));
        EXPECT_LE(std::abs(s.left_ticks - prev), 1);
        prev = s.left_ticks;
        EXPECT_GT(s.pose.theta, -kPi);
        EXPECT_LE(s.pose.theta, kPi);
    }
}

TEST(Physics, DutyIsClamped) {
    const RobotParams p = quiet();
    std::mt19937_64 rng(0);
    DriveState a, b;
    physics_step(a, {3.0, 3.0}, p, rng);
    physics_step(b, {1.0, 1.0}, p, rng);
    EXPECT_EQ(a.pose.x, b.pose.x);
}

TEST(NormalizeAngle, HalfOpenRange) {
    EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
    EXPECT_NEAR(normalize_angle(3 * kPi / 2), -kPi / 2, 1e-15);
    EXPECT_NEAR(normalize_angle(-5 * kPi / 2), -kPi / 2, 1e-15);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-50, 50);
    for (int i = 0; i < 1000; ++i) {
        const double a = d(rng);
        const double n = normalize_angle(a);
        EXPECT_GT(n, -kPi);
        EXPECT_LE(n, kPi);
        EXPECT_NEAR(std::remainder(a - n, 2 * kPi), 0.0, 1e-12);
    }
}

TEST(RobotParams, Defaults) {
    const RobotParams p;
    EXPECT_EQ(p.forward_ticks(), 32);
    EXPECT_EQ(p.turn_ticks(), 10);
    EXPECT_NEAR(p.tick_arc(), 0.0094248, 1e-6);
    RobotParams bad;
    bad.dt = 0.1;
    EXPECT_THROW(bad.validate(), Error);
}

class ForwardAccuracy : public ::testing::TestWithParam<std::pair<int, double>> {};

TEST_P(ForwardAccuracy, WithinOneTickArc) {
    const auto [tpr, dt] = GetParam();
    const RobotParams p = quiet(tpr, dt);
    Simulator sim(p, PidGains{}, 0);
    sim.execute(MovePrimitive::Forward);
    const auto& pose = sim.state().pose;
    EXPECT_NEAR(std::hypot(pose.x, pose.y), p.cell_length, p.tick_arc());
    EXPECT_LT(std::abs(pose.theta), 0.01);
}

INSTANTIATE_TEST_SUITE_P(TickResolution, ForwardAccuracy,
                         ::testing::Values(std::pair{20, 0.01}, std::pair{200, 0.001}));

TEST(Forward, FinerEncoderIsMoreAccurate) {
    Simulator coarse(quiet(20, 0.001), PidGains{}, 0);
    Simulator fine(quiet(200, 0.001), PidGains{}, 0);
    coarse.execute(MovePrimitive::Forward);
    fine.execute(MovePrimitive::Forward);
    EXPECT_LT(quiet(200).tick_arc(), quiet(20).tick_arc());
    EXPECT_LT(std::abs(fine.state().pose.x - 0.3), quiet(20).tick_arc());
}

TEST(Turn, LeftThenRightRestoresHeading) {
    const RobotParams p = quiet();
    Simulator sim(p, PidGains{}, 0, {0, 0, 0.4});
    sim.execute(MovePrimitive::TurnLeft);
    EXPECT_NEAR(angle_diff(sim.state().pose.theta, 0.4), kPi / 2, 0.05);
    sim.execute(MovePrimitive::TurnRight);
    const double tick_heading = 2 * p.tick_arc() / p.track_width;  // heading change per opposed tick
    EXPECT_LT(angle_diff(sim.state().pose.theta, 0.4), 2 * tick_heading);
    EXPECT_NEAR(sim.state().pose.x, 0.0, 1e-9);
}

TEST(Turn, FourLeftsMakeFullCircle) {
    Simulator sim(quiet(), PidGains{}, 0);
    for (int i = 0; i < 4; ++i) sim.execute(MovePrimitive::TurnLeft);
    EXPECT_LT(angle_diff(sim.state().pose.theta, 0.0), 0.05);
}

TEST(Turn, PivotAboutHaltedSide) {
    RobotParams p = quiet();
    p.turn_mode = TurnMode::Pivot;
    Simulator sim(p, PidGains{}, 0);
    sim.execute(MovePrimitive::TurnLeft);
    const auto& pose = sim.state().pose;
    EXPECT_NEAR(pose.theta, kPi / 2, 0.05);
    EXPECT_NEAR(pose.x, p.track_width / 2, 0.005);
    EXPECT_NEAR(pose.y, p.track_width / 2, 0.005);
    // left side never moved
    EXPECT_EQ(sim.state().left_angle, 0.0);
}

TEST(Turn, PivotRight) {
    RobotParams p = quiet();
    p.turn_mode = TurnMode::Pivot;
    Simulator sim(p, PidGains{}, 0);
    sim.execute(MovePrimitive::TurnRight);
    const auto& pose = sim.state().pose;
    EXPECT_NEAR(pose.theta, -kPi / 2, 0.05);
    EXPECT_NEAR(pose.x, p.track_width / 2, 0.005);
    EXPECT_NEAR(pose.y, -p.track_width / 2, 0.005);
}

TEST(Simulator, DeadMotorsStall) {
    RobotParams p = quiet();
    p.max_wheel_speed = 0.0;
    Simulator sim(p, PidGains{}, 0);
    try {
        sim.execute(MovePrimitive::Forward);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "primitive-stalled");
    }
    EXPECT_GT(sim.trajectory().size(), 1u);
}

TEST(Pid, ReducesDriftUnderBias) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RobotParams p;
        p.left_bias = 0.02;
        p.right_bias = -0.02;
        Simulator with(p, PidGains{}, seed, {}, true);
        Simulator without(p, PidGains{}, seed, {}, false);
        with.execute(MovePrimitive::Forward);
        without.execute(MovePrimitive::Forward);
        EXPECT_LT(std::abs(with.state().pose.theta), std::abs(without.state().pose.theta));
    }
}

TEST(ExecutePlan, Corridor) {
    const GridSpec g{1, 3, {0, 0}, {0, 2}, {}};
    const auto r = execute_plan(g, PathPlan::from_codes({2, 2}), Action::Up, quiet(), PidGains{}, 0);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.final_cell, (Cell{0, 2}));
    EXPECT_EQ(r.final_heading, Action::Right);
    EXPECT_EQ(r.primitives_executed, 3u);
    EXPECT_NEAR(r.final_pose.x, 0.6, 0.02);
}

TEST(ExecutePlan, DrivesBlindlyIntoObstacles) {
    const GridSpec g{1, 3, {0, 0}, {0, 2}, {{0, 1}}};
    const PathPlan plan = PathPlan::from_codes({2, 2});
    EXPECT_TRUE(replay_plan(g, plan).entered_obstacle);
    const auto r = execute_plan(g, plan, Action::Right, quiet(), PidGains{}, 0);
    EXPECT_EQ(r.final_cell, (Cell{0, 2}));
}

TEST(ExecutePlan, StallReportsPartialTrajectory) {
    RobotParams p = quiet();
    p.max_wheel_speed = 0.0;
    const GridSpec g{1, 3, {0, 0}, {0, 2}, {}};
    const auto r = execute_plan(g, PathPlan::from_codes({2, 2}), Action::Right, p, PidGains{}, 0);
    EXPECT_FALSE(r.success);
    EXPECT_TRUE(r.stalled);
    EXPECT_NE(r.error.find("primitive-stalled"), std::string::npos);
    EXPECT_GT(r.trajectory.size(), 1u);
}

TEST(ExecutePlan, AdoptsNewPlanBetweenPrimitives) {
    // 3x3: start heading RIGHT along the top row; after the first cell the
    // route is replaced by DOWN, DOWN, RIGHT from (0,1).
    const GridSpec g{3, 3, {0, 0}, {2, 2}, {}};
    int calls = 0;
    const PlanUpdateSource updates = [&]() -> std::optional<PathPlan> {
        if (++calls != 1) return std::nullopt;
        return PathPlan::from_codes({3, 3, 2});
    };
    const auto r = execute_plan(g, PathPlan::from_codes({2, 2, 2, 2}), Action::Right, quiet(), PidGains{}, 0, updates);
    EXPECT_EQ(r.final_cell, (Cell{2, 2}));
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.final_heading, Action::Right);
}

TEST(ExecutePlan, TrajectoryExport) {
    const GridSpec g{1, 2, {0, 0}, {0, 1}, {}};
    const auto r = execute_plan(g, PathPlan::from_codes({2}), Action::Right, quiet(), PidGains{}, 0);
    std::ostringstream os;
    write_trajectory_csv(os, r.trajectory);
    const std::string csv = os.str();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,x,y,theta,left_ticks,right_ticks");
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.trajectory.size() + 1);
    const auto summary = drive_summary(r);
    EXPECT_EQ(summary["final_cell"], nlohmann::json::array({0, 1}));
    EXPECT_TRUE(summary["success"].get<bool>());
    EXPECT_EQ(summary["primitive_count"].get<int>(), 1);
}
