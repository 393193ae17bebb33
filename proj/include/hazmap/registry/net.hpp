#pragma once

#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

namespace hazmap::registry {

inline constexpr const char* kProtocolHello = "HELLO 1";

/// Blocking TCP socket with buffered newline framing.  Reads support
/// timeouts; writes are complete-or-fail.
class LineSocket {
public:
    LineSocket() = default;
    explicit LineSocket(int fd) : fd_(fd) {}
    LineSocket(const LineSocket&) = delete;
    LineSocket& operator=(const LineSocket&) = delete;
    LineSocket(LineSocket&& other) noexcept { swap(other); }
    LineSocket& operator=(LineSocket&& other) noexcept {
        if (this != &other) {
            close_socket();
            swap(other);
        }
        return *this;
    }
    ~LineSocket() { close_socket(); }

    bool valid() const { return fd_ >= 0; }
    bool eof() const { return eof_; }
    int fd() const { return fd_; }

    void close_socket() {
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
        eof_ = true;
    }

    /// Interrupts a blocked read from another thread without closing the fd.
    void shutdown_read() {
        if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
    }

    bool write_line(const std::string& line) { return write_raw(line + "\n"); }

    /// Sends an already newline-terminated block as one unit.
    bool write_raw(const std::string& data) {
        std::size_t off = 0;
        while (off < data.size()) {
            const ssize_t n =
                ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
            if (n < 0) {
                if (errno == EINTR) continue;
                eof_ = true;
                return false;
            }
            if (n == 0) {
                eof_ = true;
                return false;
            }
            off += static_cast<std::size_t>(n);
        }
        return true;
    }

    /// Next line without its newline; nullopt on timeout or connection end
    /// (check eof() to tell them apart).  timeout_ms < 0 blocks indefinitely.
    std::optional<std::string> read_line(int timeout_ms) {
        using Clock = std::chrono::steady_clock;
        const auto deadline =
            timeout_ms < 0 ? Clock::time_point::max()
                           : Clock::now() + std::chrono::milliseconds(timeout_ms);
        for (;;) {
            const auto nl = buf_.find('\n');
            if (nl != std::string::npos) {
                std::string line = buf_.substr(0, nl);
                buf_.erase(0, nl + 1);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }
            if (eof_) {
                if (buf_.empty()) return std::nullopt;
                std::string line;
                line.swap(buf_);
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return line;
            }

            int wait = -1;
            if (timeout_ms >= 0) {
                const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                                      deadline - Clock::now())
                                      .count();
                if (left < 0) return std::nullopt;
                wait = static_cast<int>(left);
            }
            struct pollfd pfd{fd_, POLLIN, 0};
            const int pr = ::poll(&pfd, 1, wait);
            if (pr == 0) return std::nullopt;
            if (pr < 0) {
                if (errno == EINTR) continue;
                eof_ = true;
                return std::nullopt;
            }
            char tmp[4096];
            const ssize_t n = ::recv(fd_, tmp, sizeof(tmp), 0);
            if (n < 0) {
                if (errno == EINTR) continue;
                eof_ = true;
                return std::nullopt;
            }
            if (n == 0) {
                eof_ = true;
                continue;  // flush any buffered final line on next pass
            }
            buf_.append(tmp, static_cast<std::size_t>(n));
        }
    }

private:
    void swap(LineSocket& other) {
        std::swap(fd_, other.fd_);
        std::swap(buf_, other.buf_);
        std::swap(eof_, other.eof_);
    }

    int fd_ = -1;
    std::string buf_;
    bool eof_ = false;
};

struct Endpoint {
    std::string host = "127.0.0.1";
    uint16_t port = 0;
};

/// Parses "host:port"; a bare number is a port on localhost.
inline Endpoint parse_endpoint(const std::string& text) {
    Endpoint ep;
    const auto colon = text.rfind(':');
    std::string port_part;
    if (colon == std::string::npos) {
        port_part = text;
    } else {
        ep.host = text.substr(0, colon);
        port_part = text.substr(colon + 1);
    }
    if (ep.host.empty()) ep.host = "127.0.0.1";
    char* end = nullptr;
    const long p = std::strtol(port_part.c_str(), &end, 10);
    if (port_part.empty() || *end != '\0' || p < 0 || p > 65535)
        throw std::invalid_argument("bad endpoint: " + text);
    ep.port = static_cast<uint16_t>(p);
    return ep;
}

inline sockaddr_in make_addr(const std::string& host, uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::invalid_argument("bad IPv4 address: " + host);
    return addr;
}

/// Listening socket; port 0 picks an ephemeral port (see bound_port).
inline int listen_on(const std::string& host, uint16_t port, uint16_t& bound_port,
                     int backlog = 16) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = make_addr(host, port);
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw std::runtime_error("bind " + host + ":" + std::to_string(port) + ": " + err);
    }
    if (::listen(fd, backlog) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw std::runtime_error("listen: " + err);
    }
    sockaddr_in actual{};
    socklen_t len = sizeof(actual);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&actual), &len) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw std::runtime_error("getsockname: " + err);
    }
    bound_port = ntohs(actual.sin_port);
    return fd;
}

inline LineSocket connect_to(const std::string& host, uint16_t port) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw std::runtime_error("socket: " + std::string(std::strerror(errno)));
    sockaddr_in addr = make_addr(host, port);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
        const std::string err = std::strerror(errno);
        ::close(fd);
        throw std::runtime_error("connect " + host + ":" + std::to_string(port) + ": " + err);
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return LineSocket(fd);
}

}  // namespace hazmap::registry
