#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "burst/net.hpp"
#include "burst/wire.hpp"

namespace burst::server {

struct ServerConfig {
    std::filesystem::path docroot;
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;  // 0 picks an ephemeral port
    /// Emulated per-request processing time, slept once per GET and once per
    /// BURST request before the first response byte.
    std::chrono::milliseconds processing_delay{0};
    /// Sensitivity knob: sleep once per burst part instead of once per BURST
    /// request.
    bool per_object_delay = false;
    int max_burst_paths = 512;
    int max_connections = 256;
};

/// Parsed-request counters. GET requests for /_stats are excluded so a test
/// harness can poll the counters without skewing them.
struct ServerStats {
    std::atomic<std::uint64_t> requests_total{0};
    std::atomic<std::uint64_t> burst_requests{0};
};

/// Static-file server answering GET and BURST over keep-alive connections.
class Server {
public:
    explicit Server(ServerConfig config);
    ~Server();

    /// Binds and starts accepting. Throws net::SocketError when the port
    /// cannot be bound and std::invalid_argument for a bad config.
    void start();
    /// Stops accepting and waits for in-flight connections to finish.
    void stop();
    bool running() const { return running_.load(); }
    std::uint16_t port() const { return port_; }
    const ServerStats& stats() const { return stats_; }

private:
    void accept_loop();
    void connection_main(net::Socket sock);
    void dispatch(const wire::Request& request, net::HttpStream& stream);
    void handle_get(std::string_view target, net::HttpStream& stream);
    void handle_burst(const wire::Request& request, net::HttpStream& stream);
    wire::BurstPart make_part(const wire::ObjectRef& ref) const;

    ServerConfig config_;
    ServerStats stats_;
    std::unique_ptr<net::Listener> listener_;
    std::uint16_t port_ = 0;
    std::thread accept_thread_;
    std::atomic<bool> stop_{false};
    std::atomic<bool> running_{false};
    std::mutex active_mutex_;
    std::condition_variable active_cv_;
    int active_connections_ = 0;
};

/// Blocking convenience for the CLI: start, then run until `stop_flag`.
void serve(const ServerConfig& config, const std::atomic<bool>& stop_flag);

/// Content type by file extension (html, css, js, jpg, png, woff2; otherwise
/// application/octet-stream).
std::string_view content_type_for(std::string_view path);

}  // namespace burst::server
