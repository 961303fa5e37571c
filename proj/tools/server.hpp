#pragma once

// Newline-delimited JSON over TCP. Every connection owns an independent
// Session; a single thread per connection serializes message handling and
// ticking for that session.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <string>
#include <thread>

#include "janus/session.hpp"

namespace janus::server {

struct ServeOptions {
  int port = 7878;
  bool manual_clock = false;  // ticks only on "step" messages
  bool quiet = false;
};

inline bool send_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<std::size_t>(n);
  }
  return true;
}

inline void serve_connection(int fd, SessionConfig cfg, bool manual_clock) {
  using Clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(1.0 / cfg.tick_rate));
  Session session(std::move(cfg));
  auto next_tick = Clock::now() + period;
  std::string buffer;
  char chunk[4096];

  for (;;) {
    int timeout_ms = -1;
    if (!manual_clock) {
      auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - Clock::now());
      timeout_ms = static_cast<int>(std::max<long>(0, wait.count()));
    }
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready < 0 && errno != EINTR) break;

    if (ready > 0) {
      if (pfd.revents & (POLLERR | POLLNVAL)) break;
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      std::size_t nl;
      std::string out;
      while ((nl = buffer.find('\n')) != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        for (auto& r : session.handle_line(line)) out += r + '\n';
      }
      if (!out.empty() && !send_all(fd, out)) break;
    }

    if (!manual_clock && Clock::now() >= next_tick) {
      if (!send_all(fd, session.tick() + '\n')) break;
      next_tick += period;
      // Skip missed ticks rather than bursting to catch up.
      if (Clock::now() > next_tick + 4 * period) next_tick = Clock::now() + period;
    }
  }
  ::close(fd);
}

/// Blocks forever accepting connections on 127.0.0.1:port.
inline int serve(const SessionConfig& cfg, const ServeOptions& opt) {
  Session probe(cfg);  // surface configuration errors before listening
  std::signal(SIGPIPE, SIG_IGN);
  int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) throw ConfigError(std::string("socket: ") + std::strerror(errno));
  int yes = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(opt.port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(srv, 8) < 0) {
    const std::string err = std::strerror(errno);
    ::close(srv);
    throw ConfigError("cannot listen on port " + std::to_string(opt.port) + ": " + err);
  }
  if (!opt.quiet) std::fprintf(stderr, "listening on 127.0.0.1:%d\n", opt.port);
  for (;;) {
    int fd = ::accept(srv, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      break;
    }
    std::thread(serve_connection, fd, cfg, opt.manual_clock).detach();
  }
  ::close(srv);
  return 0;
}

}  // namespace janus::server
