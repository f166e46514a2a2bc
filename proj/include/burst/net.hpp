#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "burst/wire.hpp"

namespace burst::net {

class SocketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TimeoutError : public SocketError {
public:
    using SocketError::SocketError;
};

using Deadline = std::chrono::steady_clock::time_point;

inline Deadline no_deadline() { return Deadline::max(); }
Deadline deadline_after(std::chrono::milliseconds ms);

/// Owning, move-only file descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& other) noexcept;
    Socket& operator=(Socket&& other) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket();

    int fd() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void close();

private:
    int fd_ = -1;
};

/// Resolves `host` and connects a non-blocking TCP socket.
Socket connect_tcp(const std::string& host, std::uint16_t port, Deadline deadline);

/// Listening socket with poll-based accept so shutdown can interrupt it.
class Listener {
public:
    Listener(const std::string& host, std::uint16_t port, int backlog);
    std::uint16_t port() const { return port_; }
    /// Waits up to `poll_interval` for a connection; nullopt on timeout or
    /// after close().
    std::optional<Socket> accept(std::chrono::milliseconds poll_interval);
    void close();

private:
    Socket sock_;
    std::uint16_t port_ = 0;
};

/// Buffered HTTP/1.1 message stream over one connection. Owns the socket and
/// the decode buffer; one instance per connection, not shared across threads.
class HttpStream {
public:
    explicit HttpStream(Socket sock) : sock_(std::move(sock)) {}

    void write(std::string_view bytes, Deadline deadline);

    /// Next request on the stream. nullopt on clean EOF between messages or
    /// when `stop` flips while idle; throws wire::IncompleteFrame if the peer
    /// closes mid-message and TimeoutError past the deadline.
    std::optional<wire::Request> read_request(Deadline deadline,
                                              const std::atomic<bool>* stop = nullptr);
    std::optional<wire::Response> read_response(Deadline deadline);

    std::uint64_t bytes_read() const { return bytes_read_; }
    std::uint64_t bytes_written() const { return bytes_written_; }
    Socket& socket() { return sock_; }

private:
    template <typename Message, typename Decoder>
    std::optional<Message> read_message(Deadline deadline, const std::atomic<bool>* stop,
                                        Decoder&& decoder);

    Socket sock_;
    std::string buf_;
    std::uint64_t bytes_read_ = 0;
    std::uint64_t bytes_written_ = 0;
};

}  // namespace burst::net
