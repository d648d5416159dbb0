#pragma once

// Simulation configuration and its JSON form. Every field has a default, so a
// config file only needs the keys it changes.

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fic_teleop/comms.hpp"
#include "fic_teleop/controllers.hpp"
#include "fic_teleop/dynamics.hpp"
#include "fic_teleop/environment.hpp"
#include "fic_teleop/operator.hpp"

namespace fic_teleop {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ControllerKind { kFic, kIc };

std::string to_string(ControllerKind kind);
ControllerKind controller_kind_from_string(const std::string& name);

enum class Stream { kForceFeedback, kVirtualForce, kDesiredPose };

std::string to_string(Stream s);
Stream stream_from_string(const std::string& name);

struct StreamChannels {
  ChannelConfig f_fb;
  ChannelConfig f_v;
  ChannelConfig x_d;

  ChannelConfig& get(Stream s);
  const ChannelConfig& get(Stream s) const;
  /// Same delay and rate on all three streams.
  static StreamChannels uniform(double delay, double sample_rate, double base_tick);
};

/// Channel reconfiguration applied at a given tick (live sessions record
/// these so batch replays see the same conditions).
struct ChannelEvent {
  std::int64_t tick = 0;
  Stream stream = Stream::kForceFeedback;
  ChannelConfig config;
};

struct MasterConfig {
  double mass = 0.5;  // kg per axis
  std::vector<FicParams> fic;
  double k_a = 1.0;
  double hand_stiffness = 400.0;  // N/m, operator grip
  double hand_damping = 20.0;     // N*s/m
  double rate_gain = kDefaultRateGain;
};

struct ReplicaConfig {
  ReplicaParams params;
  double ic_damping_factor = kIcDampingFactor;
};

struct ScenarioConfig {
  ScriptKind kind = ScriptKind::kIdle;
  std::uint64_t seed = 1;
  std::string profile = "conservative";
  int object = 0;  // catalog index for object_touch
  Eigen::Vector2d button_top{0.45, 0.0};
  std::vector<RecordedCommand> recorded;
};

struct SimConfig {
  double dt = 1e-4;
  double duration = 60.0;
  ControllerKind controller = ControllerKind::kFic;
  std::uint64_t seed = 1;
  int log_every = 10;        // steps per log row
  double stop_after_done = 1.0;  // s simulated after a scripted task ends
  StreamChannels channels;
  std::vector<ChannelEvent> channel_events;
  ManipulatorModel model;
  Eigen::VectorXd initial_q;
  ReplicaConfig replica;
  MasterConfig master;
  ScenarioConfig scenario;
  std::vector<ContactObject> objects;  // empty: derived from the scenario

  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// Three-link arm, calibrated FIC on both sides, idle scenario.
SimConfig default_config();

/// default_config() with the two-button task and its panel.
SimConfig button_task_config(const std::string& profile = "conservative");

/// default_config() with the hammer-impulse scenario.
SimConfig impulse_config(std::uint64_t seed = 1);

/// Objects the scenario interacts with (explicit list or scenario default).
std::vector<ContactObject> scenario_objects(const SimConfig& cfg);

OperatorScript build_script(const SimConfig& cfg);

nlohmann::json to_json(const SimConfig& cfg);
/// Overlays `j` on default_config(). Throws ConfigError.
SimConfig config_from_json(const nlohmann::json& j);
SimConfig load_config(const std::string& path);

nlohmann::json to_json(const OperatorOutput& out);
OperatorOutput operator_output_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ChannelConfig& c);
ChannelConfig channel_config_from_json(const nlohmann::json& j, double base_tick);

}  // namespace fic_teleop
