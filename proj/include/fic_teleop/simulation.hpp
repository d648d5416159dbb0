#pragma once

// Fixed-step co-simulation of operator, master device, channels, replica
// controller, arm dynamics and contacts. Batch runs and the live service both
// drive the same Simulation::step.

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fic_teleop/comms.hpp"
#include "fic_teleop/config.hpp"
#include "fic_teleop/controllers.hpp"
#include "fic_teleop/dynamics.hpp"
#include "fic_teleop/environment.hpp"
#include "fic_teleop/experiment_log.hpp"
#include "fic_teleop/operator.hpp"

namespace fic_teleop {

struct SimulationAbort : std::runtime_error {
  SimulationAbort(const std::string& what, std::string tail)
      : std::runtime_error(what), log_tail(std::move(tail)) {}
  std::string log_tail;  // last rows of the log as CSV
};

struct MasterState {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();  // displacement from home
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  std::vector<AxisFicState> fic;
};

/// Values produced by one step, also used for the live state stream.
struct StepRecord {
  double t = 0.0;  // time at the end of the step
  OperatorOutput command;
  Eigen::VectorXd x_desired_cmd;   // master-side reference before its channel
  Eigen::VectorXd x_desired;       // replica-side reference after the channel
  Eigen::VectorXd x_desired_rate;
  Eigen::VectorXd f_v_pre;
  Eigen::VectorXd f_v_post;
  Eigen::Vector2d f_fb_pre = Eigen::Vector2d::Zero();
  Eigen::Vector2d f_fb_post = Eigen::Vector2d::Zero();
  Eigen::Vector2d contact = Eigen::Vector2d::Zero();
  Eigen::Vector2d hammer = Eigen::Vector2d::Zero();
  ReplicaCommand replica;
  Eigen::VectorXd master_she;
  double port_work = 0.0;  // work done by the impedance terms during the step, J
};

inline constexpr int kLogTailRows = 20;

class Simulation {
 public:
  /// Throws ConfigError for invalid configs.
  explicit Simulation(SimConfig cfg);

  /// One tick driven by the configured script.
  const StepRecord& step();
  /// One tick with an externally supplied operator command (live mode).
  const StepRecord& step(const OperatorOutput& command);

  /// Scripted command for the next tick (does not advance).
  OperatorOutput scripted_command();

  /// Changes a stream's channel at the next tick boundary and records the
  /// change in the config so batch replays see it.
  void set_channel(Stream stream, const ChannelConfig& cfg);

  /// Records every externally supplied command in the config so the run can
  /// be replayed in batch as a `recorded` scenario.
  void enable_recording();

  /// Sets the configured duration to the current time, so a replay of the
  /// config stops exactly here.
  void end_at_current_tick();

  bool finished() const;
  std::int64_t tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * cfg_.dt; }

  const SimConfig& config() const { return cfg_; }
  const JointState& joints() const { return js_; }
  const MasterState& master() const { return master_; }
  const ObservedFeedback& observed() const { return observed_; }
  const std::vector<ContactObject>& objects() const { return objects_; }
  const std::vector<ButtonLatch>& buttons() const { return latches_; }
  const OperatorState& operator_state() const { return op_state_; }
  const StepRecord& last() const { return last_; }
  const ChannelConfig& channel(Stream s) const { return channels_.get(s); }
  Eigen::VectorXd ee_pose() const;
  Eigen::VectorXd x_desired_cmd() const { return x_desired_cmd_; }

  /// Log with its metadata filled in from the current config.
  const ExperimentLog& log();
  ExperimentLog take_log();

 private:
  void apply_channel_events();
  void append_row();
  void check_finite();

  SimConfig cfg_;
  OperatorScript script_;
  OperatorState op_state_;
  std::vector<ContactObject> objects_;
  std::vector<ButtonLatch> latches_;
  IcParams ic_;
  MasterParams master_params_;

  JointState js_;
  MasterState master_;
  std::vector<AxisFicState> replica_fic_;
  Eigen::VectorXd x_desired_cmd_;
  Eigen::VectorXd x_desired_prev_;

  StreamChannels channels_;
  ChannelState ch_f_fb_;
  ChannelState ch_f_v_;
  ChannelState ch_x_d_;
  std::size_t event_cursor_ = 0;

  ObservedFeedback observed_;
  Eigen::Vector2d f_fb_observed_ = Eigen::Vector2d::Zero();
  StepRecord last_;

  std::int64_t tick_ = 0;
  std::int64_t max_ticks_ = 0;
  double done_time_ = -1.0;
  bool recording_ = false;
  std::optional<OperatorOutput> last_recorded_;

  ExperimentLog log_;
  double interval_work_ = 0.0;
  std::vector<double> row_;
};

/// Runs a config to completion and returns its log.
ExperimentLog run(const SimConfig& cfg);

struct GridResult {
  SimConfig config;
  std::optional<ExperimentLog> log;
  std::string error;  // non-empty when the run aborted
};

/// Independent runs; a failing run does not stop the others.
std::vector<GridResult> run_grid(const std::vector<SimConfig>& configs);

/// Every (delay, rate) combination applied uniformly to the three streams.
std::vector<SimConfig> grid_configs(const SimConfig& base, const std::vector<double>& delays,
                                    const std::vector<double>& rates);

}  // namespace fic_teleop
