#include "burst/server.hpp"

#include <fstream>
#include <sstream>

#include "burst/log.hpp"
#include "burst/util.hpp"

namespace burst::server {

namespace fs = std::filesystem;

namespace {

constexpr std::chrono::milliseconds kAcceptTick{100};

std::optional<std::string> read_file(const fs::path& file, bool& unreadable) {
    unreadable = false;
    std::error_code ec;
    if (!fs::is_regular_file(file, ec) || ec) return std::nullopt;
    std::ifstream in(file, std::ios::binary);
    if (!in) {
        unreadable = true;
        return std::nullopt;
    }
    std::ostringstream body;
    body << in.rdbuf();
    if (in.bad()) {
        unreadable = true;
        return std::nullopt;
    }
    return body.str();
}

}  // namespace

std::string_view content_type_for(std::string_view path) {
    const std::size_t dot = path.rfind('.');
    if (dot == std::string_view::npos) return "application/octet-stream";
    const std::string_view ext = path.substr(dot + 1);
    if (iequals(ext, "html") || iequals(ext, "htm")) return "text/html";
    if (iequals(ext, "css")) return "text/css";
    if (iequals(ext, "js")) return "application/javascript";
    if (iequals(ext, "jpg") || iequals(ext, "jpeg")) return "image/jpeg";
    if (iequals(ext, "png")) return "image/png";
    if (iequals(ext, "woff2")) return "font/woff2";
    return "application/octet-stream";
}

Server::Server(ServerConfig config) : config_(std::move(config)) {}

Server::~Server() { stop(); }

void Server::start() {
    if (running_.load()) return;
    std::error_code ec;
    if (!fs::is_directory(config_.docroot, ec) || ec)
        throw std::invalid_argument("docroot is not a readable directory: " +
                                    config_.docroot.string());
    if (config_.processing_delay.count() < 0)
        throw std::invalid_argument("processing delay must be >= 0");
    if (config_.max_burst_paths < 1)
        throw std::invalid_argument("max burst paths must be >= 1");

    listener_ = std::make_unique<net::Listener>(config_.host, config_.port, 128);
    port_ = listener_->port();
    stop_.store(false);
    running_.store(true);
    accept_thread_ = std::thread(&Server::accept_loop, this);
    log_info("listening on " + config_.host + ":" + std::to_string(port_));
}

void Server::stop() {
    if (!running_.exchange(false)) return;
    stop_.store(true);
    // the accept loop polls on a short tick, so it notices the flag on its
    // own; joining before touching the listener avoids cross-thread fd use
    if (accept_thread_.joinable()) accept_thread_.join();
    std::unique_lock<std::mutex> lock(active_mutex_);
    active_cv_.wait(lock, [this] { return active_connections_ == 0; });
    lock.unlock();
    listener_.reset();
}

void Server::accept_loop() {
    while (!stop_.load()) {
        auto sock = listener_->accept(kAcceptTick);
        if (!sock) continue;
        {
            std::lock_guard<std::mutex> lock(active_mutex_);
            if (active_connections_ >= config_.max_connections) {
                log_warn("connection limit reached; dropping connection");
                continue;  // closes the socket
            }
            ++active_connections_;
        }
        std::thread(&Server::connection_main, this, std::move(*sock)).detach();
    }
}

void Server::connection_main(net::Socket sock) {
    {
        net::HttpStream stream(std::move(sock));
        while (!stop_.load()) {
            std::optional<wire::Request> request;
            try {
                request = stream.read_request(net::no_deadline(), &stop_);
            } catch (const wire::ProtocolError& err) {
                try {
                    stream.write(wire::encode_response(400, "text/plain",
                                                       std::string(err.what()) + "\n"),
                                 net::deadline_after(std::chrono::seconds(10)));
                } catch (...) {
                }
                break;
            } catch (const std::exception& err) {
                log_debug(std::string("connection dropped: ") + err.what());
                break;
            }
            if (!request) break;  // clean close or shutdown
            try {
                dispatch(*request, stream);
            } catch (const std::exception& err) {
                log_debug(std::string("response aborted: ") + err.what());
                break;
            }
        }
    }
    std::lock_guard<std::mutex> lock(active_mutex_);
    --active_connections_;
    active_cv_.notify_all();
}

void Server::dispatch(const wire::Request& request, net::HttpStream& stream) {
    const auto write_deadline = net::deadline_after(std::chrono::minutes(2));

    if (request.method == "GET") {
        if (request.target == "/_stats") {
            std::string body = "requests_total=" +
                               std::to_string(stats_.requests_total.load()) +
                               "\nburst_requests=" +
                               std::to_string(stats_.burst_requests.load()) + "\n";
            stream.write(wire::encode_response(200, "text/plain", body), write_deadline);
            return;
        }
        stats_.requests_total.fetch_add(1);
        std::this_thread::sleep_for(config_.processing_delay);
        handle_get(request.target, stream);
        return;
    }

    if (request.method == "BURST") {
        stats_.requests_total.fetch_add(1);
        stats_.burst_requests.fetch_add(1);
        if (!config_.per_object_delay)
            std::this_thread::sleep_for(config_.processing_delay);
        handle_burst(request, stream);
        return;
    }

    stream.write(wire::encode_response(405, "text/plain", "method not allowed\n"),
                 write_deadline);
}

void Server::handle_get(std::string_view target, net::HttpStream& stream) {
    const auto write_deadline = net::deadline_after(std::chrono::minutes(2));
    const std::size_t cut = target.find_first_of("?#");
    if (cut != std::string_view::npos) target = target.substr(0, cut);

    const auto decoded = percent_decode(target);
    if (!decoded) {
        stream.write(wire::encode_response(400, "text/plain", "bad percent-encoding\n"),
                     write_deadline);
        return;
    }
    const auto normalized = wire::lexical_normalize(*decoded, wire::DotSegments::Reject);
    if (!normalized) {
        stream.write(wire::encode_response(403, "text/plain", "forbidden\n"),
                     write_deadline);
        return;
    }

    const fs::path file = config_.docroot / normalized->substr(1);
    bool unreadable = false;
    const auto body = read_file(file, unreadable);
    if (unreadable) {
        stream.write(wire::encode_response(500, "text/plain", "cannot read file\n"),
                     write_deadline);
        return;
    }
    if (!body) {
        stream.write(wire::encode_response(404, "text/plain", "not found\n"),
                     write_deadline);
        return;
    }
    stream.write(wire::encode_response(200, content_type_for(*normalized), *body),
                 write_deadline);
}

void Server::handle_burst(const wire::Request& request, net::HttpStream& stream) {
    const auto write_deadline = net::deadline_after(std::chrono::minutes(2));

    wire::BurstRequest burst;
    try {
        burst = wire::burst_request_from(request);
    } catch (const std::exception& err) {
        stream.write(wire::encode_response(400, "text/plain",
                                           std::string(err.what()) + "\n"),
                     write_deadline);
        return;
    }
    if (burst.paths.size() > static_cast<std::size_t>(config_.max_burst_paths)) {
        stream.write(wire::encode_response(413, "text/plain", "too many burst paths\n"),
                     write_deadline);
        return;
    }
    // Parts are encoded and written one at a time, so large bursts never
    // require the whole file set in memory.
    for (const wire::ObjectRef& ref : burst.paths) {
        if (config_.per_object_delay)
            std::this_thread::sleep_for(config_.processing_delay);
        stream.write(wire::encode_burst_part(make_part(ref)), write_deadline);
    }
}

wire::BurstPart Server::make_part(const wire::ObjectRef& ref) const {
    wire::BurstPart part;
    part.path = ref;
    part.status = 404;
    part.content_type = "text/plain";

    const auto decoded = percent_decode(ref.path);
    if (!decoded) return part;
    const auto normalized = wire::lexical_normalize(*decoded, wire::DotSegments::Reject);
    if (!normalized) return part;  // a path escaping the root has no object

    bool unreadable = false;
    auto body = read_file(config_.docroot / normalized->substr(1), unreadable);
    if (!body) return part;

    part.status = 200;
    part.content_type = std::string(content_type_for(*normalized));
    part.body = std::move(*body);
    return part;
}

void serve(const ServerConfig& config, const std::atomic<bool>& stop_flag) {
    Server server(config);
    server.start();
    while (!stop_flag.load())
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    log_info("shutting down");
    server.stop();
}

}  // namespace burst::server
