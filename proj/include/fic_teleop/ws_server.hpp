#pragma once

// HTTP + WebSocket front end for a LiveSession. Static files are served from
// a directory at `/`; the WebSocket endpoint is `/ws`. Everything runs on one
// io_context thread.

#include <cstddef>
#include <memory>
#include <string>

#include "fic_teleop/live_session.hpp"

namespace fic_teleop {

inline constexpr std::size_t kClientQueueLimit = 64;  // messages; oldest dropped first

struct ServerOptions {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::string static_dir = ".";
};

/// Resolves a request target below `root`; empty when the target escapes it.
std::string resolve_static_path(const std::string& root, const std::string& target);

class WsServer {
 public:
  WsServer(LiveSession& session, ServerOptions opts);
  ~WsServer();

  /// Binds and listens; returns the bound port.
  unsigned short listen();
  /// Blocks until stop().
  void run();
  void stop();

  std::size_t client_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fic_teleop
