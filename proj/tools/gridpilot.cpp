#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "gridpilot/cli.hpp"

namespace {

// SIGINT/SIGTERM are blocked before any thread starts so `serve` can collect
// them synchronously with sigwait.
sigset_t shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    return set;
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = gridpilot::cli;

    CLI::App app{"gridpilot: grid path planning, path service and robot simulation"};
    app.require_subcommand(1);

    cli::PlanOptions plan;
    auto* plan_cmd = app.add_subcommand("plan", "train or search a maze and emit the path in wire format");
    plan_cmd->add_option("--maze", plan.maze, "maze file (.#SG text grid or JSON config)")->required();
    plan_cmd->add_option("--algo", plan.algo, "q | dqn | bfs")->check(CLI::IsMember({"q", "dqn", "bfs"}));
    plan_cmd->add_option("--out", plan.out, "write the wire JSON to this file");
    plan_cmd->add_option("--url", plan.url, "PUT the plan to a running path service, e.g. http://127.0.0.1:8080");
    plan_cmd->add_option("--seed", plan.seed, "training seed (overrides the maze config)");
    plan_cmd->add_option("--episodes", plan.episodes, "training episodes");

    cli::ServeOptions serve;
    auto* serve_cmd = app.add_subcommand("serve", "run the path service until interrupted");
    serve_cmd->add_option("--addr", serve.addr, "host:port (default $GRIDPILOT_ADDR or 127.0.0.1:8080)");

    cli::DriveOptions drive;
    auto* drive_cmd = app.add_subcommand("drive", "execute a plan on the simulated robot");
    drive_cmd->add_option("--maze", drive.maze, "maze file")->required();
    drive_cmd->add_option("--plan", drive.plan_file, "wire-format plan file");
    drive_cmd->add_option("--url", drive.url, "path service base URL");
    drive_cmd->add_option("--seed", drive.seed, "noise seed");
    drive_cmd->add_option("--noise", drive.noise, "relative wheel speed noise std");
    drive_cmd->add_option("--turn-mode", drive.turn_mode, "in_place | pivot")
        ->check(CLI::IsMember({"in_place", "pivot"}));
    drive_cmd->add_option("--max-wheel-speed", drive.max_wheel_speed, "rad/s at full duty");
    drive_cmd->add_option("--heading", drive.heading, "initial heading code (0 LEFT, 1 UP, 2 RIGHT, 3 DOWN)");
    drive_cmd->add_option("--poll-interval", drive.poll_interval, "seconds between service polls while driving");
    drive_cmd->add_option("--trajectory", drive.trajectory_out, "trajectory CSV output");
    drive_cmd->add_option("--summary", drive.summary_out, "run summary JSON output");

    cli::CompareOptions compare;
    auto* compare_cmd = app.add_subcommand("compare", "time Q-learning against DQN over a maze set");
    compare_cmd->add_option("--maze-dir", compare.maze_dir, "directory of .maze/.json files");
    compare_cmd->add_option("--generate", compare.generate, "number of random mazes to generate");
    compare_cmd->add_option("--rows", compare.rows, "generated maze rows");
    compare_cmd->add_option("--cols", compare.cols, "generated maze columns");
    compare_cmd->add_option("--max-obstacles", compare.max_obstacles, "generated maze obstacle cap");
    compare_cmd->add_option("--generator-seed", compare.generator_seed, "seed for maze generation");
    compare_cmd->add_option("--seed", compare.seeds, "training seeds (repeatable)");
    compare_cmd->add_option("--episodes", compare.episodes, "training episodes for both learners");
    compare_cmd->add_option("--out", compare.out, "CSV output (default stdout)");
    compare_cmd->add_option("--jobs", compare.jobs, "parallel training jobs");

    const sigset_t signals = shutdown_signals();
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*plan_cmd) return cli::cmd_plan(plan, std::cout, std::cerr);
        if (*serve_cmd)
            return cli::cmd_serve(serve, std::cout, std::cerr, [&] {
                int sig = 0;
                sigwait(&signals, &sig);
            });
        if (*drive_cmd) return cli::cmd_drive(drive, std::cout, std::cerr);
        if (*compare_cmd) return cli::cmd_compare(compare, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
