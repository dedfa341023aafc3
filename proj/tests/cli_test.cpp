#include <gridpilot/cli.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace gridpilot;
using namespace gridpilot::cli;
namespace fs = std::filesystem;

namespace {

const std::string kMazes = GRIDPILOT_MAZE_DIR;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("gridpilot-cli-" + std::to_string(::getpid()) + "-" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
    std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, PlanBfsWritesWireFile) {
    PlanOptions opt{kMazes + "/corridor.maze", "bfs", path("plan.json"), {}, {}, {}};
    EXPECT_EQ(cmd_plan(opt, out_, err_), kOk) << err_.str();
    EXPECT_EQ(read_file(path("plan.json")), R"({"array":["2","2"]})");
}

TEST_F(CliTest, PlanQMatchesBfs) {
    PlanOptions bfs{kMazes + "/corridor.maze", "bfs", path("bfs.json"), {}, {}, {}};
    PlanOptions q{kMazes + "/corridor.maze", "q", path("q.json"), {}, 3, {}};
    ASSERT_EQ(cmd_plan(bfs, out_, err_), kOk);
    ASSERT_EQ(cmd_plan(q, out_, err_), kOk) << err_.str();
    EXPECT_EQ(read_file(path("q.json")), read_file(path("bfs.json")));
}

TEST_F(CliTest, PlanRejectsBadInput) {
    PlanOptions walled{kMazes + "/walled.maze", "bfs", {}, {}, {}, {}};
    EXPECT_EQ(cmd_plan(walled, out_, err_), kInput);
    EXPECT_NE(err_.str().find("unreachable-goal"), std::string::npos);
    PlanOptions missing{path("nope.maze"), "bfs", {}, {}, {}, {}};
    EXPECT_EQ(cmd_plan(missing, out_, err_), kInput);
    PlanOptions algo{kMazes + "/corridor.maze", "astar", {}, {}, {}, {}};
    EXPECT_EQ(cmd_plan(algo, out_, err_), kInput);
}

TEST_F(CliTest, PlanUnconvergedExits3) {
    PlanOptions opt{kMazes + "/reference-course.maze", "q", {}, {}, 1, 1};
    EXPECT_EQ(cmd_plan(opt, out_, err_), kConvergence) << out_.str() << err_.str();
}

TEST_F(CliTest, PlanToUnreachableServerExits4) {
    PathServer s;
    const int port = s.start({"127.0.0.1", 0});
    s.stop();
    PlanOptions opt{kMazes + "/corridor.maze", "bfs", {}, "http://127.0.0.1:" + std::to_string(port), {}, {}};
    EXPECT_EQ(cmd_plan(opt, out_, err_), kNetwork);
}

TEST_F(CliTest, DriveFromFile) {
    write_file(path("plan.json"), R"({"array":["2","2"]})");
    DriveOptions opt;
    opt.maze = kMazes + "/corridor.maze";
    opt.plan_file = path("plan.json");
    opt.noise = 0.0;
    opt.trajectory_out = path("traj.csv");
    opt.summary_out = path("summary.json");
    EXPECT_EQ(cmd_drive(opt, out_, err_), kOk) << err_.str();
    const auto summary = nlohmann::json::parse(read_file(path("summary.json")));
    EXPECT_EQ(summary["final_cell"], nlohmann::json::array({0, 2}));
    EXPECT_TRUE(summary["success"].get<bool>());
    EXPECT_EQ(read_file(path("traj.csv")).rfind("t,x,y,theta", 0), 0u);
}

TEST_F(CliTest, DriveFromServerMatchesFile) {
    PathServer server;
    const int port = server.start({"127.0.0.1", 0});
    const std::string url = "http://127.0.0.1:" + std::to_string(port);
    PlanOptions plan{kMazes + "/open-3x3.maze", "bfs", path("plan.json"), url, {}, {}};
    ASSERT_EQ(cmd_plan(plan, out_, err_), kOk) << err_.str();

    DriveOptions from_file;
    from_file.maze = kMazes + "/open-3x3.maze";
    from_file.plan_file = path("plan.json");
    from_file.summary_out = path("file.json");
    from_file.seed = 4;
    DriveOptions from_url = from_file;
    from_url.plan_file.reset();
    from_url.url = url;
    from_url.summary_out = path("url.json");
    ASSERT_EQ(cmd_drive(from_file, out_, err_), kOk) << err_.str();
    ASSERT_EQ(cmd_drive(from_url, out_, err_), kOk) << err_.str();
    auto a = nlohmann::json::parse(read_file(path("file.json")));
    auto b = nlohmann::json::parse(read_file(path("url.json")));
    a.erase("wall_time_s");
    b.erase("wall_time_s");
    EXPECT_EQ(a, b);
}

TEST_F(CliTest, DriveEmptyServerExits4) {
    PathServer server;
    const int port = server.start({"127.0.0.1", 0});
    DriveOptions opt;
    opt.maze = kMazes + "/corridor.maze";
    opt.url = "http://127.0.0.1:" + std::to_string(port);
    EXPECT_EQ(cmd_drive(opt, out_, err_), kNetwork);
}

TEST_F(CliTest, DriveStallExits5) {
    write_file(path("plan.json"), R"({"array":["2","2"]})");
    DriveOptions opt;
    opt.maze = kMazes + "/corridor.maze";
    opt.plan_file = path("plan.json");
    opt.max_wheel_speed = 0.0;
    EXPECT_EQ(cmd_drive(opt, out_, err_), kExecution);
    EXPECT_NE(err_.str().find("primitive-stalled"), std::string::npos);
}

TEST_F(CliTest, DriveWarnsOnObstaclePlan) {
    write_file(path("maze.maze"), "S#G\n...\n");
    write_file(path("plan.json"), R"({"array":["2","2"]})");
    DriveOptions opt;
    opt.maze = path("maze.maze");
    opt.plan_file = path("plan.json");
    opt.heading = 2;
    opt.noise = 0.0;
    EXPECT_EQ(cmd_drive(opt, out_, err_), kOk);
    EXPECT_NE(err_.str().find("obstacle"), std::string::npos);
}

TEST_F(CliTest, DriveNeedsOneSource) {
    DriveOptions opt;
    opt.maze = kMazes + "/corridor.maze";
    EXPECT_EQ(cmd_drive(opt, out_, err_), kInput);
}

TEST_F(CliTest, CompareCorridor) {
    write_file(path("corridor.maze"), "S.G\n");
    CompareOptions opt;
    opt.maze_dir = dir_.string();
    opt.episodes = 300;
    opt.out = path("report.csv");
    ASSERT_EQ(cmd_compare(opt, out_, err_), kOk) << err_.str();
    std::istringstream csv(read_file(path("report.csv")));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    EXPECT_EQ(header.rfind("Test sample number,", 0), 0u);
    EXPECT_EQ(row.substr(row.size() - 6), ",2,2,2");
    EXPECT_NE(out_.str().find("obstacles=0"), std::string::npos);
}

TEST_F(CliTest, CompareRowCountAndDeterminism) {
    CompareOptions opt;
    opt.generate = 5;
    opt.rows = 3;
    opt.cols = 3;
    opt.max_obstacles = 2;
    opt.seeds = {1, 2, 3};
    opt.episodes = 150;
    opt.jobs = 2;
    std::vector<MazeConfig> mazes;
    std::mt19937_64 rng(opt.generator_seed);
    for (int i = 0; i < 5; ++i) mazes.push_back({"m" + std::to_string(i), random_spec(3, 3, 2, rng), {}, {}, {}, 0});
    for (auto& m : mazes) {
        m.qlearning.episodes = 150;
        m.dqn.episodes = 150;
    }
    const auto a = run_compare(mazes, opt.seeds, 2);
    const auto b = run_compare(mazes, opt.seeds, 1);
    ASSERT_EQ(a.rows.size(), 15u);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].ql_length, b.rows[i].ql_length);
        EXPECT_EQ(a.rows[i].dql_length, b.rows[i].dql_length);
        EXPECT_EQ(a.rows[i].sample, static_cast<int>(i + 1));
        EXPECT_GE(a.rows[i].ql_length.value_or(a.rows[i].bfs_length), a.rows[i].bfs_length);
        EXPECT_GE(a.rows[i].dql_length.value_or(a.rows[i].bfs_length), a.rows[i].bfs_length);
    }

    ASSERT_EQ(cmd_compare(opt, out_, err_), kOk) << err_.str();
    std::istringstream csv(out_.str());
    int lines = 0;
    for (std::string l; std::getline(csv, l) && l.rfind("obstacles=", 0) != 0;) ++lines;
    EXPECT_EQ(lines, 16);
}

TEST_F(CliTest, CompareNeedsMazes) {
    CompareOptions opt;
    EXPECT_EQ(cmd_compare(opt, out_, err_), kInput);
}

TEST_F(CliTest, ServeBindFailureExits4) {
    PathServer holder;
    const int port = holder.start({"127.0.0.1", 0});
    ServeOptions opt{"127.0.0.1:" + std::to_string(port)};
    bool waited = false;
    EXPECT_EQ(cmd_serve(opt, out_, err_, [&] { waited = true; }), kNetwork);
    EXPECT_FALSE(waited);
}

TEST_F(CliTest, ServeRunsUntilWaitReturns) {
    ServeOptions opt{"127.0.0.1:0"};
    std::string health;
    EXPECT_EQ(cmd_serve(opt, out_, err_,
                        [&] {
                            const std::string line = out_.str();
                            const auto colon = line.rfind(':');
                            const int port = std::stoi(line.substr(colon + 1));
                            httplib::Client cli("127.0.0.1", port);
                            if (auto res = cli.Get("/health")) health = res->body;
                        }),
              kOk);
    EXPECT_EQ(health, "ok");
}
