#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "mcs/error.hpp"
#include "mcs/protocol.hpp"

namespace mcs::net {

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
};

/// Parses `host:port` (host may be empty, meaning 127.0.0.1).
inline Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw Error(ErrorCode::kInvalidConfig, "expected host:port");
  Endpoint e;
  if (colon > 0) e.host = std::string(text.substr(0, colon));
  if (!mcs::detail::parse_number(text.substr(colon + 1), e.port) || e.port < 0 || e.port > 65535) {
    throw Error(ErrorCode::kInvalidConfig, "bad port in '" + std::string(text) + "'");
  }
  return e;
}

/// Owning, line-buffered stream socket.
class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  LineSocket(LineSocket&& o) noexcept : fd_(std::exchange(o.fd_, -1)), buffer_(std::move(o.buffer_)) {}
  LineSocket& operator=(LineSocket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = std::exchange(o.fd_, -1);
      buffer_ = std::move(o.buffer_);
    }
    return *this;
  }
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;
  ~LineSocket() { close(); }

  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  /// Reads up to the next '\n' (stripped). False on EOF or error.
  bool read_line(std::string& line) {
    while (true) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line.assign(buffer_, 0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  bool write_line(std::string_view line) {
    std::string data(line);
    data.push_back('\n');
    std::size_t sent = 0;
    while (sent < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

 private:
  int fd_ = -1;
  std::string buffer_;
};

inline LineSocket connect_tcp(const Endpoint& e) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(e.host.c_str(), std::to_string(e.port).c_str(), &hints, &res) != 0 || !res) {
    throw Error(ErrorCode::kEnvUnreachable, "cannot resolve " + e.host);
  }
  const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const bool ok = fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0;
  ::freeaddrinfo(res);
  if (!ok) {
    if (fd >= 0) ::close(fd);
    throw Error(ErrorCode::kEnvUnreachable, e.host + ":" + std::to_string(e.port) + ": " + std::strerror(errno));
  }
  return LineSocket(fd);
}

class TcpListener {
 public:
  explicit TcpListener(const Endpoint& e) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw Error(ErrorCode::kEnvUnreachable, "socket()");
    const int yes = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(e.port));
    if (::inet_pton(AF_INET, e.host.c_str(), &addr.sin_addr) != 1) {
      ::close(fd_);
      throw Error(ErrorCode::kInvalidConfig, "listen address must be a dotted IPv4 address");
    }
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 16) != 0) {
      const std::string why = std::strerror(errno);
      ::close(fd_);
      throw Error(ErrorCode::kEnvUnreachable, "bind/listen: " + why);
    }
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  int port() const { return port_; }

  LineSocket accept() {
    while (true) {
      const int fd = ::accept(fd_, nullptr, nullptr);
      if (fd < 0 && errno == EINTR) continue;
      return LineSocket(fd);
    }
  }

 private:
  int fd_ = -1;
  int port_ = 0;
};

/// Runs a protocol session over one connection until close or disconnect.
inline void run_session(LineSocket sock, const SimConfig& base) {
  protocol::Session session(base);
  std::string line;
  while (!session.closed() && sock.read_line(line)) {
    if (line.empty()) continue;
    for (const std::string& reply : session.handle(line)) {
      if (!sock.write_line(reply)) return;
    }
  }
}

/// Accepts connections and serves each on its own thread with its own environment.
/// `max_connections` < 0 serves forever.
inline void serve_tcp(TcpListener& listener, const SimConfig& base, int max_connections = -1) {
  std::vector<std::jthread> workers;
  for (int served = 0; max_connections < 0 || served < max_connections; ++served) {
    LineSocket sock = listener.accept();
    if (!sock.valid()) break;
    workers.emplace_back([s = std::move(sock), &base]() mutable { run_session(std::move(s), base); });
  }
}

}  // namespace mcs::net
