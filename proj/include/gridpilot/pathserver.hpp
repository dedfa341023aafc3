#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#ifndef CPPHTTPLIB_LISTEN_BACKLOG
#define CPPHTTPLIB_LISTEN_BACKLOG 256
#endif
#include <httplib.h>
#include <json.hpp>

#include "channel.hpp"
#include "error.hpp"
#include "gridworld.hpp"
#include "pathcodec.hpp"

namespace gridpilot {

inline constexpr const char* kVersionHeader = "X-Path-Version";
inline constexpr const char* kAddrEnv = "GRIDPILOT_ADDR";
inline constexpr const char* kDefaultAddr = "127.0.0.1:8080";

struct PathRecord {
    std::string payload;  // wire bytes exactly as accepted
    std::uint64_t version = 0;
    std::chrono::system_clock::time_point updated_at;
};

struct PutOutcome {
    int status = 204;
    std::string reason;  // empty on success, otherwise a decode_wire error code
    std::uint64_t version = 0;
};

// The single current record. Replacement swaps a shared_ptr under a mutex, so
// readers hold a complete immutable record and never see a partial write.
class PathStore {
public:
    PathStore() = default;
    explicit PathStore(std::optional<PathRecord> initial) {
        if (!initial) return;
        decode_wire(initial->payload);
        current_ = std::make_shared<const PathRecord>(std::move(*initial));
    }

    std::shared_ptr<const PathRecord> get() const {
        std::lock_guard lock(mutex_);
        return current_;
    }

    PutOutcome put(std::string body) {
        try {
            decode_wire(body);
        } catch (const Error& e) {
            return {400, e.code(), 0};
        }
        std::lock_guard lock(mutex_);
        const std::uint64_t next = current_ ? current_->version + 1 : 1;
        current_ = std::make_shared<const PathRecord>(
            PathRecord{std::move(body), next, std::chrono::system_clock::now()});
        return {204, {}, next};
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const PathRecord> current_;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    int port = 8080;

    std::string to_string() const { return host + ":" + std::to_string(port); }
};

// "host:port" or ":port".
inline Endpoint parse_endpoint(std::string_view text) {
    const auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw Error("bad-address", "expected host:port, got \"" + std::string(text) + "\"");
    Endpoint ep;
    if (colon > 0) ep.host = std::string(text.substr(0, colon));
    const std::string port(text.substr(colon + 1));
    try {
        std::size_t used = 0;
        ep.port = std::stoi(port, &used);
        if (used != port.size()) throw std::invalid_argument(port);
    } catch (const std::exception&) {
        throw Error("bad-address", "invalid port \"" + port + "\"");
    }
    if (ep.port < 0 || ep.port > 65535) throw Error("bad-address", "port out of range");
    return ep;
}

// Explicit flag, else GRIDPILOT_ADDR, else 127.0.0.1:8080.
inline Endpoint resolve_endpoint(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return parse_endpoint(*flag);
    if (const char* env = std::getenv(kAddrEnv); env && *env) return parse_endpoint(env);
    return parse_endpoint(kDefaultAddr);
}

// Serves GET/PUT/POST /path and GET /health on a background thread.
class PathServer {
public:
    explicit PathServer(std::optional<PathRecord> initial = std::nullopt, std::size_t threads = 64)
        : store_(std::move(initial)) {
        server_.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
        // SO_REUSEADDR only: a second server on an occupied port must fail to bind.
        server_.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
        });
        server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("ok", "text/plain");
        });
        server_.Get("/path", [this](const httplib::Request&, httplib::Response& res) {
            const auto rec = store_.get();
            if (!rec) {
                res.status = 404;
                res.set_content(R"({"error":"no-plan"})", "application/json");
                return;
            }
            res.set_header(kVersionHeader, std::to_string(rec->version));
            res.set_content(rec->payload, "application/json");
        });
        const auto put = [this](const httplib::Request& req, httplib::Response& res) {
            const PutOutcome out = store_.put(req.body);
            res.status = out.status;
            if (out.status == 204) {
                res.set_header(kVersionHeader, std::to_string(out.version));
            } else {
                res.set_content(nlohmann::json{{"error", out.reason}}.dump(), "application/json");
            }
        };
        server_.Put("/path", put);
        server_.Post("/path", put);
    }

    PathServer(const PathServer&) = delete;
    PathServer& operator=(const PathServer&) = delete;
    ~PathServer() { stop(); }

    // Binds (port 0 picks a free port) and starts serving. Returns the bound port.
    int start(const Endpoint& ep) {
        if (thread_.joinable()) throw Error("already-running", "server already started");
        int port = ep.port;
        if (port == 0) {
            port = server_.bind_to_any_port(ep.host);
            if (port < 0) throw Error("bind", "could not bind " + ep.host + ":0");
        } else if (!server_.bind_to_port(ep.host, port)) {
            throw Error("bind", "could not bind " + ep.to_string());
        }
        port_ = port;
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    // Stops accepting and waits for in-flight requests to finish.
    void stop() {
        if (!thread_.joinable()) return;
        server_.stop();
        thread_.join();
    }

    int port() const noexcept { return port_; }
    PathStore& store() noexcept { return store_; }

private:
    PathStore store_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

// Base URL of a path service: "http://host:port", optionally ending in "/path".
struct ServiceUrl {
    std::string base;  // scheme://host:port
    std::string path = "/path";
};

inline ServiceUrl parse_service_url(std::string_view url) {
    constexpr std::string_view scheme = "http://";
    if (!url.starts_with(scheme)) throw Error("bad-url", "only http:// URLs are supported: " + std::string(url));
    const auto slash = url.find('/', scheme.size());
    ServiceUrl out;
    out.base = std::string(url.substr(0, slash));
    if (slash != std::string_view::npos && slash + 1 < url.size()) out.path = std::string(url.substr(slash));
    if (out.base.size() == scheme.size()) throw Error("bad-url", "missing host in " + std::string(url));
    return out;
}

struct FetchedPlan {
    PathPlan plan;
    std::uint64_t version = 0;
};

namespace detail {

inline httplib::Client make_client(const ServiceUrl& u) {
    httplib::Client cli(u.base);
    cli.set_connection_timeout(std::chrono::seconds(2));
    cli.set_read_timeout(std::chrono::seconds(5));
    return cli;
}

inline std::uint64_t version_of(const httplib::Result& res) {
    if (!res->has_header(kVersionHeader)) return 0;
    const std::string v = res->get_header_value(kVersionHeader);
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw Error("http-status", "bad version header \"" + v + "\"");
    }
}

}  // namespace detail

// Single GET + decode. Transport failures raise code "network".
inline FetchedPlan fetch_path_once(std::string_view url) {
    const ServiceUrl u = parse_service_url(url);
    auto cli = detail::make_client(u);
    const auto res = cli.Get(u.path);
    if (!res) throw Error("network", httplib::to_string(res.error()));
    if (res->status == 404) throw Error("no-plan", "server holds no plan");
    if (res->status != 200) throw Error("http-status", "GET returned " + std::to_string(res->status));
    try {
        return {decode_wire(res->body), detail::version_of(res)};
    } catch (const Error& e) {
        throw Error(e.code(), std::string(e.what()) + "; body: " + res->body.substr(0, 80));
    }
}

struct RetryPolicy {
    std::chrono::duration<double> base{0.5};
    std::chrono::duration<double> cap{8.0};
    int max_attempts = 5;

    // Waits between consecutive attempts: base·2^k capped.
    std::vector<std::chrono::duration<double>> delays() const {
        std::vector<std::chrono::duration<double>> out;
        auto d = base;
        for (int i = 1; i < max_attempts; ++i) {
            out.push_back(std::min(d, cap));
            d *= 2.0;
        }
        return out;
    }
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

inline void real_sleep(std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }

// Retries only transport failures; a 404 or a bad body fails immediately.
inline FetchedPlan fetch_path(std::string_view url, const RetryPolicy& policy = {}, const Sleeper& sleep = real_sleep) {
    const auto delays = policy.delays();
    for (int attempt = 0;; ++attempt) {
        try {
            return fetch_path_once(url);
        } catch (const Error& e) {
            if (e.code() != "network") throw;
            if (attempt + 1 >= policy.max_attempts)
                throw Error("network", "giving up after " + std::to_string(policy.max_attempts) +
                                           " attempts: " + e.what());
            sleep(delays[static_cast<std::size_t>(attempt)]);
        }
    }
}

// PUT a plan; returns the version the server assigned.
inline std::uint64_t put_path(std::string_view url, const PathPlan& plan) {
    const ServiceUrl u = parse_service_url(url);
    auto cli = detail::make_client(u);
    const auto res = cli.Put(u.path, encode_wire(plan), "application/json");
    if (!res) throw Error("network", httplib::to_string(res.error()));
    if (res->status != 204 && res->status != 200)
        throw Error("http-status", "PUT returned " + std::to_string(res->status) + " " + res->body);
    return detail::version_of(res);
}

struct PlanUpdate {
    PathPlan plan;
    std::uint64_t version = 0;
};

// Polls the service and pushes a PlanUpdate whenever the version header
// changes (the first successful fetch counts as a change). Fetch failures are
// counted and polling continues.
class PathPoller {
public:
    PathPoller(std::string url, std::chrono::milliseconds interval)
        : url_(std::move(url)), interval_(interval), thread_([this](std::stop_token st) { run(st); }) {}

    PathPoller(const PathPoller&) = delete;
    PathPoller& operator=(const PathPoller&) = delete;
    ~PathPoller() { stop(); }

    Channel<PlanUpdate>& updates() noexcept { return updates_; }
    std::size_t failures() const noexcept { return failures_.load(); }

    void stop() {
        if (!thread_.joinable()) return;
        thread_.request_stop();
        thread_.join();
        updates_.close();
    }

private:
    void run(std::stop_token st) {
        std::optional<std::uint64_t> last;
        std::mutex m;
        std::condition_variable_any cv;
        while (!st.stop_requested()) {
            try {
                auto fetched = fetch_path_once(url_);
                if (!last || *last != fetched.version) {
                    last = fetched.version;
                    updates_.push({std::move(fetched.plan), fetched.version});
                }
            } catch (const Error&) {
                ++failures_;
            }
            std::unique_lock lock(m);
            cv.wait_for(lock, st, interval_, [] { return false; });
        }
    }

    std::string url_;
    std::chrono::milliseconds interval_;
    Channel<PlanUpdate> updates_;
    std::atomic<std::size_t> failures_{0};
    std::jthread thread_;
};

}  // namespace gridpilot
