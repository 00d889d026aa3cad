#include "waggle/service/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>

#include "waggle/error.hpp"
#include "waggle/service/websocket.hpp"

namespace waggle::service {

std::string SessionRegistry::next_id() { return "s" + std::to_string(++opened_); }

ProtocolHandler::ProtocolHandler(SessionRegistry& registry, std::optional<std::filesystem::path> archive_dir)
    : registry_(registry), archive_dir_(std::move(archive_dir)) {}

std::string ProtocolHandler::fault(const std::string& code, const std::string& message) const {
  const double t = session_ && session_->ticks() > 0
                       ? static_cast<double>(session_->ticks() - 1) * session_->config().dt_tick
                       : 0.0;
  return encode(ServerMessage{FaultMsg{code, message, t}});
}

void ProtocolHandler::finish_session() {
  if (!session_ || archive_) return;
  archive_ = session_->close();
  if (archive_dir_) archive_->save(*archive_dir_ / archive_->session_id);
}

std::vector<std::string> ProtocolHandler::on_message(std::string_view line) {
  if (finished_) return {};
  ClientMessage msg;
  try {
    msg = parse_client_message(line);
  } catch (const FormatError& e) {
    return {fault("bad_message", e.what())};
  }

  if (std::holds_alternative<HelloMsg>(msg)) {
    if (session_) return {fault("protocol", "session already open")};
    try {
      const SessionConfig cfg = session_config_from_json(std::get<HelloMsg>(msg).config);
      session_ = std::make_unique<Session>(registry_.next_id(), cfg);
    } catch (const Error& e) {
      return {fault("invalid_config", e.what())};
    }
    return {encode(ServerMessage{WelcomeMsg{session_->id(), session_->config().dt_tick}})};
  }
  if (std::holds_alternative<ByeMsg>(msg)) {
    finished_ = true;
    std::vector<std::string> out;
    if (session_ && session_->status() != SessionStatus::closed) out.push_back(encode(ServerMessage{session_->live_metrics()}));
    try {
      finish_session();
    } catch (const Error& e) {
      out.push_back(fault("archive", e.what()));
    }
    return out;
  }
  if (!session_) return {fault("no_session", "send hello first")};
  if (session_->status() != SessionStatus::open) return {fault("session_closed", "session is not accepting input")};

  try {
    if (const auto* hp = std::get_if<HpMsg>(&msg)) {
      session_->ingest_hp(hp->t, {hp->x, hp->y});
    } else if (const auto* solo = std::get_if<SoloUploadMsg>(&msg)) {
      session_->upload_solo(solo->samples);
    } else if (const auto* g = std::get_if<SetGainsMsg>(&msg)) {
      session_->set_gains(g->gains);
    }
  } catch (const ConfigError& e) {
    return {fault("invalid_gains", e.what())};
  } catch (const Error& e) {
    return {fault(std::holds_alternative<SoloUploadMsg>(msg) ? "invalid_solo" : "bad_message", e.what())};
  }
  return {};
}

std::vector<std::string> ProtocolHandler::on_tick() {
  if (!ticking()) return {};
  const TickOutput out = session_->tick();
  std::vector<std::string> lines{encode(ServerMessage{out.vp})};
  if (out.metrics) lines.push_back(encode(ServerMessage{*out.metrics}));
  if (out.fault) lines.push_back(encode(ServerMessage{*out.fault}));
  return lines;
}

void ProtocolHandler::on_disconnect() {
  finished_ = true;
  finish_session();
}

Server::Server(ServerOptions opts) : opts_(std::move(opts)) {}

Server::~Server() { stop(); }

void Server::start() {
  if (running_) return;
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw IoError(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(opts_.port);
  if (::inet_pton(AF_INET, opts_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw ConfigError("bad listen address '" + opts_.host + "'");
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw IoError("bind/listen on " + opts_.host + ":" + std::to_string(opts_.port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  if (acceptor_.joinable()) acceptor_.join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(threads_mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(threads_mu_);
    client_fds_.push_back(fd);
    threads_.emplace_back([this, fd] { serve(fd); });
  }
}

namespace {

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

void Server::serve(int fd) {
  using clock = std::chrono::steady_clock;
  enum class Mode { unknown, lines, websocket } mode = Mode::unknown;
  ProtocolHandler handler(registry_, opts_.archive_dir);
  WsDecoder ws(opts_.max_message);
  std::string inbox;
  bool alive = true;
  bool was_ticking = false;
  clock::time_point next_tick;

  auto send_lines = [&](const std::vector<std::string>& lines) {
    for (const auto& l : lines) {
      const bool ok = mode == Mode::websocket ? send_all(fd, encode_ws_frame(l)) : send_all(fd, l + "\n");
      if (!ok) {
        alive = false;
        return;
      }
    }
  };

  auto handle_bytes = [&] {
    if (mode == Mode::unknown) {
      const std::string_view get = "GET ";
      const std::size_t k = std::min(inbox.size(), get.size());
      if (inbox.compare(0, k, get.substr(0, k)) == 0) {
        if (inbox.size() < get.size()) return;
        const std::size_t end = inbox.find("\r\n\r\n");
        if (end == std::string::npos) {
          if (inbox.size() > opts_.max_message) alive = false;
          return;
        }
        try {
          alive = send_all(fd, websocket_handshake_response(inbox.substr(0, end + 4)));
        } catch (const FormatError&) {
          send_all(fd, "HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
          alive = false;
          return;
        }
        ws.feed(std::string_view(inbox).substr(end + 4));
        inbox.clear();
        mode = Mode::websocket;
      } else {
        mode = Mode::lines;
      }
    }
    if (mode == Mode::lines) {
      std::size_t nl;
      while (alive && (nl = inbox.find('\n')) != std::string::npos) {
        std::string line = inbox.substr(0, nl);
        inbox.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        send_lines(handler.on_message(line));
      }
      if (inbox.size() > opts_.max_message) {
        inbox.clear();
        send_lines({encode(ServerMessage{FaultMsg{"bad_message", "message too long", 0.0}})});
      }
    } else if (mode == Mode::websocket) {
      try {
        while (alive) {
          auto m = ws.next();
          if (!m) break;
          if (m->opcode == WsOpcode::ping) {
            alive = send_all(fd, encode_ws_frame(m->payload, WsOpcode::pong));
          } else if (m->opcode == WsOpcode::close) {
            send_all(fd, encode_ws_frame("", WsOpcode::close));
            alive = false;
          } else if (m->opcode == WsOpcode::text || m->opcode == WsOpcode::binary) {
            send_lines(handler.on_message(m->payload));
          }
        }
      } catch (const FormatError&) {
        send_all(fd, encode_ws_frame("", WsOpcode::close));
        alive = false;
      }
    }
  };

  char buf[4096];
  while (alive && running_ && !handler.finished()) {
    int timeout_ms = 100;
    if (handler.ticking()) {
      if (!was_ticking) {
        next_tick = clock::now();
        was_ticking = true;
      }
      const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_tick - clock::now()).count();
      timeout_ms = static_cast<int>(std::clamp<long long>(wait, 0, 100));
    }
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, timeout_ms);
    if (rc < 0 && errno != EINTR) break;
    if (rc > 0) {
      if (p.revents & (POLLERR | POLLNVAL)) break;
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n <= 0) break;
      inbox.append(buf, static_cast<std::size_t>(n));
      if (mode == Mode::websocket) {
        ws.feed(inbox);
        inbox.clear();
      }
      handle_bytes();
    }
    if (alive && handler.ticking() && was_ticking && clock::now() >= next_tick) {
      send_lines(handler.on_tick());
      const auto dt = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(handler.dt_tick()));
      next_tick += dt;
      // A stall longer than a few ticks resynchronizes instead of bursting.
      if (clock::now() - next_tick > 5 * dt) next_tick = clock::now();
    }
  }
  try {
    handler.on_disconnect();
  } catch (const Error&) {
  }
  ::shutdown(fd, SHUT_RDWR);
  {
    std::lock_guard lock(threads_mu_);
    client_fds_.erase(std::remove(client_fds_.begin(), client_fds_.end(), fd), client_fds_.end());
  }
  ::close(fd);
}

}  // namespace waggle::service
