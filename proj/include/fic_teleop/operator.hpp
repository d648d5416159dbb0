#pragma once

// Scripted operators for the experiment protocols, and the command schema the
// interactive console also emits. An operator only sees what comes out of the
// feedback channel (ObservedFeedback), never the replica's true state.

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fic_teleop/environment.hpp"

namespace fic_teleop {

enum class ScriptKind { kIdle, kImpulses, kObjectTouch, kButtonPress, kRecorded };

std::string to_string(ScriptKind kind);
ScriptKind script_kind_from_string(const std::string& name);

inline constexpr double kMasterWorkspaceRadius = 0.15;  // m

struct OperatorOutput {
  Eigen::Vector2d master_err = Eigen::Vector2d::Zero();  // hand-imposed master displacement
  bool master_held = false;
  bool gripper_held = false;
  std::optional<Eigen::Vector2d> pose_target;  // GUI reference pose
  Eigen::Vector2d pose_nudge = Eigen::Vector2d::Zero();  // GUI reference velocity, m/s
  Eigen::Vector2d external_impulse = Eigen::Vector2d::Zero();  // hammer force, N

  bool operator==(const OperatorOutput&) const = default;
};

struct ObservedFeedback {
  Eigen::Vector2d force = Eigen::Vector2d::Zero();
  Eigen::Vector2d ee_pose = Eigen::Vector2d::Zero();
  std::vector<bool> buttons;
};

struct Waypoint {
  double t = 0.0;
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
  bool gripper_held = false;
  Eigen::Vector2d master_err = Eigen::Vector2d::Zero();
  bool master_held = false;
};

struct ImpulseSpec {
  double t = 0.0;
  Eigen::Vector2d wrench = Eigen::Vector2d::Zero();  // peak force
  double duration = 0.01;
};

/// Press-task behaviour. The two presets stand in for an aggressive and a
/// conservative human operator.
struct OperatorProfile {
  std::string name = "conservative";
  double move_speed = 0.04;     // m/s along approach segments
  double press_force = 8.0;     // N, target observed contact force
  double kp = 0.002;            // m/(N*s), integral gain on the force error
  double kd = 0.0005;           // m/N, on observed force increments
  double settle_tol = 0.004;    // m
  double settle_time = 0.3;     // s
  double release_rate = 0.05;   // m/s of master displacement
  double hover = 0.01;          // m above the button top
  double press_timeout = 60.0;  // s
};

OperatorProfile expert_profile();
OperatorProfile conservative_profile();
OperatorProfile profile_from_name(const std::string& name);

struct RecordedCommand {
  std::int64_t tick = 0;
  OperatorOutput command;
};

struct OperatorScript {
  ScriptKind kind = ScriptKind::kIdle;
  std::vector<Waypoint> waypoints;
  std::vector<ImpulseSpec> impulses;
  std::vector<Eigen::Vector2d> buttons;  // button top centres
  Eigen::Vector2d start_pose = Eigen::Vector2d::Zero();
  OperatorProfile profile;
  std::vector<RecordedCommand> recorded;
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr int kImpulseCount = 14;
inline constexpr double kImpulsePeak = 20.0;      // N
inline constexpr double kImpulseDuration = 0.01;  // s, half-sine
inline constexpr double kImpulseSpacing = 3.0;    // s

OperatorScript impulse_protocol(std::uint64_t seed);

OperatorScript object_touch_protocol(const ContactObject& obj, const Eigen::Vector2d& start_pose);

OperatorScript button_press_protocol(const std::vector<Eigen::Vector2d>& button_tops,
                                     const Eigen::Vector2d& start_pose,
                                     const OperatorProfile& profile = conservative_profile());

enum class PressPhase { kApproach, kSettle, kPress, kRelease, kDone, kFailed };

std::string to_string(PressPhase phase);

/// Mutable memory of a reactive script; a pure function of the script and the
/// feedback observed so far.
struct OperatorState {
  PressPhase phase = PressPhase::kApproach;
  std::size_t button = 0;
  double phase_start = 0.0;
  Eigen::Vector2d segment_from = Eigen::Vector2d::Zero();
  Eigen::Vector2d segment_to = Eigen::Vector2d::Zero();
  double segment_duration = 0.0;
  Eigen::Vector2d pose_target = Eigen::Vector2d::Zero();
  Eigen::Vector2d disp = Eigen::Vector2d::Zero();
  double last_force = 0.0;
  double settle_since = -1.0;
  bool started = false;
  std::size_t cursor = 0;
  std::vector<double> activation_seen;  // observed activation time per button

  bool operator==(const OperatorState&) const = default;
};

/// Half-sine hammer force at time t, summed over all impulses.
Eigen::Vector2d impulse_force(const std::vector<ImpulseSpec>& impulses, double t);

OperatorOutput step_operator(const OperatorScript& script, OperatorState& state,
                             const ObservedFeedback& observed, double t, double dt);

bool script_finished(const OperatorScript& script, const OperatorState& state);

/// Clamps a master displacement to the master workspace disc.
Eigen::Vector2d clamp_to_workspace(const Eigen::Vector2d& v,
                                   double radius = kMasterWorkspaceRadius);

}  // namespace fic_teleop
