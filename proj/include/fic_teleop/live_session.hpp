#pragma once

// Live (interactive) driver around Simulation. The simulation runs on its own
// thread; the network side only exchanges WireMessage text with it.

#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fic_teleop/config.hpp"
#include "fic_teleop/simulation.hpp"

namespace fic_teleop {

struct WireMessage {
  std::string type;  // "state" | "command" | "config" | "event"
  std::int64_t seq = 0;
  double t = 0.0;
  nlohmann::json payload;
};

/// Throws ConfigError on malformed envelopes.
WireMessage parse_wire(const std::string& text);
std::string to_string(const WireMessage& msg);

inline constexpr double kStateRate = 60.0;  // Hz of simulated time

class LiveSession {
 public:
  using Publisher = std::function<void(const std::string&)>;

  /// Recording is always on so the session can be replayed in batch.
  explicit LiveSession(SimConfig cfg, std::string session_id = "live");
  ~LiveSession();
  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  /// Receives every outgoing message; called from the simulation thread.
  void set_publisher(Publisher p);

  /// Queues an incoming message for the next tick boundary. Returns an
  /// error text for malformed or out-of-order messages (the session keeps
  /// running); unknown types are ignored with a warning.
  std::optional<std::string> handle_message(const std::string& text);

  /// Manual stepping for tests and offline drivers.
  void advance(std::int64_t ticks);

  /// Real-time loop on a dedicated thread; real_time_factor <= 0 runs
  /// unthrottled.
  void start(double real_time_factor = 1.0);
  void stop();
  bool running() const { return running_; }

  /// Greeting sent to new clients: scene geometry and channel conditions.
  std::string hello() const;

  std::int64_t tick() const;
  OperatorOutput latest_command() const;
  /// Log of the session so far, replayable as a `recorded` scenario.
  ExperimentLog log();
  std::string session_id() const { return id_; }

 private:
  void drain_inbox();
  void step_once();
  void publish(const std::string& type, nlohmann::json payload, double t);
  nlohmann::json state_payload() const;

  std::string id_;
  mutable std::mutex sim_mutex_;
  Simulation sim_;
  OperatorOutput command_;
  std::int64_t decimation_ = 1;

  struct Pending {
    std::optional<OperatorOutput> command;
    std::vector<Stream> streams;
    ChannelConfig channel;
  };
  std::mutex inbox_mutex_;
  std::deque<Pending> inbox_;
  std::int64_t last_in_seq_ = 0;

  Publisher publisher_;
  std::mutex publish_mutex_;
  std::int64_t out_seq_ = 0;

  std::atomic<bool> running_{false};
  std::thread thread_;
};

}  // namespace fic_teleop
