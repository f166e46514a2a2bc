#include "burst/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace burst::net {

namespace {

constexpr std::chrono::milliseconds kPollTick{100};

[[noreturn]] void throw_errno(const std::string& what) {
    throw SocketError(what + ": " + std::strerror(errno));
}

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    if (flags < 0 || ::fcntl(fd, F_SETFL, flags | O_NONBLOCK) < 0)
        throw_errno("fcntl");
}

// Waits for `events` on fd, by ticks so callers can observe deadlines and
// stop flags. Returns false on timeout-tick expiry without the event.
bool poll_once(int fd, short events, std::chrono::milliseconds wait) {
    struct pollfd pfd{};
    pfd.fd = fd;
    pfd.events = events;
    const int rc = ::poll(&pfd, 1, static_cast<int>(wait.count()));
    if (rc < 0) {
        if (errno == EINTR) return false;
        throw_errno("poll");
    }
    return rc > 0;
}

std::chrono::milliseconds tick_until(Deadline deadline) {
    if (deadline == no_deadline()) return kPollTick;
    const auto now = std::chrono::steady_clock::now();
    if (deadline <= now) return std::chrono::milliseconds(0);
    const auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
    return std::min(kPollTick, std::max(std::chrono::milliseconds(1), remaining));
}

bool expired(Deadline deadline) {
    return deadline != no_deadline() && std::chrono::steady_clock::now() >= deadline;
}

}  // namespace

Deadline deadline_after(std::chrono::milliseconds ms) {
    return std::chrono::steady_clock::now() + ms;
}

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
    if (this != &other) {
        close();
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

Socket::~Socket() { close(); }

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket connect_tcp(const std::string& host, std::uint16_t port, Deadline deadline) {
    struct addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    struct addrinfo* result = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
    if (rc != 0)
        throw SocketError("cannot resolve " + host + ": " + ::gai_strerror(rc));

    std::string last_error = "no addresses";
    for (struct addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
        Socket sock(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!sock.valid()) {
            last_error = std::strerror(errno);
            continue;
        }
        set_nonblocking(sock.fd());
        const int one = 1;
        ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

        if (::connect(sock.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
            ::freeaddrinfo(result);
            return sock;
        }
        if (errno != EINPROGRESS) {
            last_error = std::strerror(errno);
            continue;
        }
        // wait for the handshake to finish
        bool connected = false;
        while (!expired(deadline)) {
            if (!poll_once(sock.fd(), POLLOUT, tick_until(deadline))) continue;
            int err = 0;
            socklen_t len = sizeof(err);
            ::getsockopt(sock.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
            if (err == 0) {
                connected = true;
            } else {
                last_error = std::strerror(err);
            }
            break;
        }
        if (connected) {
            ::freeaddrinfo(result);
            return sock;
        }
        if (expired(deadline)) {
            ::freeaddrinfo(result);
            throw TimeoutError("connect to " + host + ":" + service + " timed out");
        }
    }
    ::freeaddrinfo(result);
    throw SocketError("cannot connect to " + host + ":" + service + ": " + last_error);
}

Listener::Listener(const std::string& host, std::uint16_t port, int backlog) {
    struct addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    struct addrinfo* result = nullptr;
    const std::string service = std::to_string(port);
    const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &result);
    if (rc != 0)
        throw SocketError("cannot resolve " + host + ": " + ::gai_strerror(rc));

    std::string last_error = "no addresses";
    for (struct addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
        Socket sock(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
        if (!sock.valid()) {
            last_error = std::strerror(errno);
            continue;
        }
        const int one = 1;
        ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(sock.fd(), ai->ai_addr, ai->ai_addrlen) != 0 ||
            ::listen(sock.fd(), backlog) != 0) {
            last_error = std::strerror(errno);
            continue;
        }
        set_nonblocking(sock.fd());

        struct sockaddr_storage addr{};
        socklen_t len = sizeof(addr);
        if (::getsockname(sock.fd(), reinterpret_cast<struct sockaddr*>(&addr), &len) != 0) {
            last_error = std::strerror(errno);
            continue;
        }
        port_ = addr.ss_family == AF_INET6
                    ? ntohs(reinterpret_cast<struct sockaddr_in6*>(&addr)->sin6_port)
                    : ntohs(reinterpret_cast<struct sockaddr_in*>(&addr)->sin_port);
        sock_ = std::move(sock);
        ::freeaddrinfo(result);
        return;
    }
    ::freeaddrinfo(result);
    throw SocketError("cannot bind " + host + ":" + service + ": " + last_error);
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds poll_interval) {
    if (!sock_.valid()) return std::nullopt;
    if (!poll_once(sock_.fd(), POLLIN, poll_interval)) return std::nullopt;
    const int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd < 0) return std::nullopt;
    Socket sock(fd);
    set_nonblocking(fd);
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return sock;
}

void Listener::close() { sock_.close(); }

void HttpStream::write(std::string_view bytes, Deadline deadline) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n = ::send(sock_.fd(), bytes.data() + sent, bytes.size() - sent,
                                 MSG_NOSIGNAL);
        if (n > 0) {
            sent += static_cast<std::size_t>(n);
            bytes_written_ += static_cast<std::uint64_t>(n);
            continue;
        }
        if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
            if (expired(deadline)) throw TimeoutError("write timed out");
            poll_once(sock_.fd(), POLLOUT, tick_until(deadline));
            continue;
        }
        if (n < 0 && errno == EINTR) continue;
        throw_errno("send");
    }
}

template <typename Message, typename Decoder>
std::optional<Message> HttpStream::read_message(Deadline deadline,
                                                const std::atomic<bool>* stop,
                                                Decoder&& decoder) {
    char chunk[64 * 1024];
    while (true) {
        std::size_t consumed = 0;
        std::optional<Message> message = decoder(std::string_view(buf_), consumed);
        if (message) {
            buf_.erase(0, consumed);
            return message;
        }
        if (stop != nullptr && stop->load(std::memory_order_relaxed))
            return std::nullopt;
        if (expired(deadline)) throw TimeoutError("read timed out");

        const ssize_t n = ::recv(sock_.fd(), chunk, sizeof(chunk), 0);
        if (n > 0) {
            buf_.append(chunk, static_cast<std::size_t>(n));
            bytes_read_ += static_cast<std::uint64_t>(n);
            continue;
        }
        if (n == 0) {
            if (buf_.empty()) return std::nullopt;  // clean close between messages
            throw wire::IncompleteFrame("connection closed mid-message");
        }
        if (errno == EAGAIN || errno == EWOULDBLOCK) {
            poll_once(sock_.fd(), POLLIN, tick_until(deadline));
            continue;
        }
        if (errno == EINTR) continue;
        throw_errno("recv");
    }
}

std::optional<wire::Request> HttpStream::read_request(Deadline deadline,
                                                      const std::atomic<bool>* stop) {
    return read_message<wire::Request>(deadline, stop, [](std::string_view buf,
                                                          std::size_t& consumed) {
        return wire::try_decode_request(buf, consumed);
    });
}

std::optional<wire::Response> HttpStream::read_response(Deadline deadline) {
    return read_message<wire::Response>(deadline, nullptr, [](std::string_view buf,
                                                              std::size_t& consumed) {
        return wire::try_decode_response(buf, consumed);
    });
}

}  // namespace burst::net
