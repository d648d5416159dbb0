#pragma once

// Degradable communication channel: a pure delay line followed by a
// zero-order hold. One ChannelState per signal stream.

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <utility>

namespace fic_teleop {

struct ChannelConfig {
  double delay = 0.0;           // s, rounded to whole base ticks
  double sample_rate = 1000.0;  // Hz
  double base_tick = 1e-4;      // s

  void validate() const;
  std::int64_t delay_ticks() const;
  /// Ticks between ZOH updates; at least one.
  std::int64_t sample_period_ticks() const;

  bool operator==(const ChannelConfig&) const = default;
};

struct ChannelState {
  std::deque<Eigen::VectorXd> ring;
  Eigen::VectorXd held_value;
  double last_sample_time = 0.0;
  bool sampled = false;
};

/// Fresh state whose initial-window and held output is `neutral`.
ChannelState make_channel_state(const Eigen::VectorXd& neutral);

/// Pushes `input` at time `now` and returns the channel output: the input
/// from `now - delay`, refreshed only once per sample period.
std::pair<Eigen::VectorXd, ChannelState> channel_step(const ChannelConfig& cfg,
                                                      ChannelState state,
                                                      const Eigen::VectorXd& input, double now);

/// In-place variant used by the simulation loop.
const Eigen::VectorXd& channel_advance(const ChannelConfig& cfg, ChannelState& state,
                                       const Eigen::VectorXd& input, double now);

/// Rebuilds a channel for new conditions, seeding the delay window with the
/// value it is currently emitting so the output does not jump.
ChannelState reconfigure_channel(const ChannelState& state);

}  // namespace fic_teleop
