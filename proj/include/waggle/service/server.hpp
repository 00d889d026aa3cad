#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "waggle/service/session.hpp"

namespace waggle::service {

/// Hands out distinct session ids.
class SessionRegistry {
 public:
  std::string next_id();
  std::size_t opened() const noexcept { return opened_.load(); }

 private:
  std::atomic<std::size_t> opened_{0};
};

/// Protocol state of one connection, independent of the transport.
/// Inbound lines go through on_message, the clock through on_tick; both return
/// the outbound lines to send, in order.
class ProtocolHandler {
 public:
  explicit ProtocolHandler(SessionRegistry& registry, std::optional<std::filesystem::path> archive_dir = {});

  std::vector<std::string> on_message(std::string_view line);
  /// One session tick; empty unless ticking().
  std::vector<std::string> on_tick();
  /// Closes and archives an unfinished session.
  void on_disconnect();

  bool ticking() const noexcept { return session_ && session_->status() == SessionStatus::open; }
  bool finished() const noexcept { return finished_; }
  double dt_tick() const noexcept { return session_ ? session_->config().dt_tick : 0.0; }
  const Session* session() const noexcept { return session_.get(); }
  const std::optional<SessionArchive>& archive() const noexcept { return archive_; }

 private:
  std::string fault(const std::string& code, const std::string& message) const;
  void finish_session();

  SessionRegistry& registry_;
  std::optional<std::filesystem::path> archive_dir_;
  std::unique_ptr<Session> session_;
  std::optional<SessionArchive> archive_;
  bool finished_ = false;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8765;  ///< 0 picks a free port
  std::optional<std::filesystem::path> archive_dir;
  std::size_t max_message = 1 << 20;  ///< bytes per inbound message
};

/// TCP server, one thread per connection. A connection speaks line-delimited
/// messages, or WebSocket text frames (one message per frame) when it opens
/// with an HTTP GET upgrade.
class Server {
 public:
  explicit Server(ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting; IoError on socket failures.
  void start();
  /// Stops accepting and joins every connection thread.
  void stop();
  std::uint16_t port() const noexcept { return port_; }
  std::size_t sessions_opened() const noexcept { return registry_.opened(); }

 private:
  void accept_loop();
  void serve(int fd);

  ServerOptions opts_;
  SessionRegistry registry_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  std::mutex threads_mu_;
  std::vector<std::thread> threads_;
  std::vector<int> client_fds_;
};

}  // namespace waggle::service
