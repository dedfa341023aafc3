#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dqn.hpp"
#include "gridworld.hpp"
#include "maze.hpp"
#include "qlearning.hpp"

namespace gridpilot {

struct CompareRow {
    int sample = 0;  // 1-based, in job order
    std::string maze;
    std::uint64_t seed = 0;
    int obstacles = 0;
    double ql_seconds = 0.0;
    double dql_seconds = 0.0;
    std::optional<std::size_t> ql_length;  // empty when training or extraction failed
    std::optional<std::size_t> dql_length;
    std::size_t bfs_length = 0;
    std::string ql_error;
    std::string dql_error;
};

struct CompareReport {
    std::vector<CompareRow> rows;
};

namespace detail {

inline CompareRow compare_one(const MazeConfig& maze, std::uint64_t seed) {
    CompareRow row;
    row.maze = maze.name;
    row.seed = seed;
    row.obstacles = static_cast<int>(maze.spec.obstacles.size());
    row.bfs_length = shortest_path_bfs(maze.spec)->size();

    QHyperparams qhp = maze.qlearning;
    qhp.seed = seed;
    try {
        auto [q, stats] = train(maze.spec, qhp);
        row.ql_seconds = stats.wall_time;
        row.ql_length = extract_path(q, maze.spec).size();
    } catch (const Error& e) {
        row.ql_error = e.code();
    }

    DqnHyperparams dhp = maze.dqn;
    dhp.seed = seed;
    try {
        auto [net, stats] = train_dqn(maze.spec, dhp);
        row.dql_seconds = stats.wall_time;
        row.dql_length = extract_path(net, maze.spec).size();
    } catch (const DivergedError& e) {
        row.dql_seconds = e.stats().wall_time;
        row.dql_error = e.code();
    } catch (const Error& e) {
        row.dql_error = e.code();
    }
    return row;
}

}  // namespace detail

// Trains both learners on every (maze, seed) pair. Mazes must be valid.
// Per-row failures are recorded, never thrown.
inline CompareReport run_compare(const std::vector<MazeConfig>& mazes, const std::vector<std::uint64_t>& seeds,
                                 unsigned jobs = 1) {
    if (mazes.empty()) throw Error("no-mazes", "compare needs at least one maze");
    for (const auto& m : mazes) require_valid(m.spec);

    struct Job {
        const MazeConfig* maze;
        std::uint64_t seed;
    };
    std::vector<Job> work;
    for (const auto& m : mazes)
        for (auto s : seeds) work.push_back({&m, s});

    CompareReport report;
    report.rows.resize(work.size());
    jobs = std::max(1u, jobs);
    for (std::size_t begin = 0; begin < work.size(); begin += jobs) {
        const std::size_t end = std::min(work.size(), begin + jobs);
        std::vector<std::future<CompareRow>> running;
        for (std::size_t i = begin; i < end; ++i)
            running.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async,
                                         detail::compare_one, std::cref(*work[i].maze), work[i].seed));
        for (std::size_t i = begin; i < end; ++i) {
            report.rows[i] = running[i - begin].get();
            report.rows[i].sample = static_cast<int>(i + 1);
        }
    }
    return report;
}

// Time columns carry their unit in the header.
inline void write_compare_csv(std::ostream& os, const CompareReport& report) {
    os << "Test sample number,Maze,Seed,Obstacles,Time Taken QL (in seconds),Time Taken DQL (in seconds),"
          "Path Length QL,Path Length DQL,Path Length BFS\n";
    const auto len = [](const std::optional<std::size_t>& l) { return l ? std::to_string(*l) : std::string("failed"); };
    for (const auto& r : report.rows)
        os << r.sample << ',' << r.maze << ',' << r.seed << ',' << r.obstacles << ',' << r.ql_seconds << ','
           << r.dql_seconds << ',' << len(r.ql_length) << ',' << len(r.dql_length) << ',' << r.bfs_length << '\n';
}

struct BucketSummary {
    int obstacles = 0;
    std::size_t runs = 0;
    double mean_ql_seconds = 0.0;
    double mean_dql_seconds = 0.0;

    const char* faster() const noexcept {
        if (mean_ql_seconds < mean_dql_seconds) return "QL";
        if (mean_dql_seconds < mean_ql_seconds) return "DQL";
        return "tie";
    }
};

inline std::vector<BucketSummary> summarize_by_obstacles(const CompareReport& report) {
    std::map<int, BucketSummary> buckets;
    for (const auto& r : report.rows) {
        auto& b = buckets[r.obstacles];
        b.obstacles = r.obstacles;
        ++b.runs;
        b.mean_ql_seconds += r.ql_seconds;
        b.mean_dql_seconds += r.dql_seconds;
    }
    std::vector<BucketSummary> out;
    for (auto& [_, b] : buckets) {
        b.mean_ql_seconds /= static_cast<double>(b.runs);
        b.mean_dql_seconds /= static_cast<double>(b.runs);
        out.push_back(b);
    }
    return out;
}

inline void write_bucket_summary(std::ostream& os, const CompareReport& report) {
    for (const auto& b : summarize_by_obstacles(report))
        os << "obstacles=" << b.obstacles << " runs=" << b.runs << " mean QL " << b.mean_ql_seconds
           << " s, mean DQL " << b.mean_dql_seconds << " s -> faster: " << b.faster() << '\n';
}

}  // namespace gridpilot
