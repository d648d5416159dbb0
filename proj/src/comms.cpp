#include "fic_teleop/comms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fic_teleop {

void ChannelConfig::validate() const {
  if (!(delay >= 0.0) || !std::isfinite(delay)) throw std::invalid_argument("channel delay must be >= 0");
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw std::invalid_argument("channel sample rate must be > 0");
  }
  if (!(base_tick > 0.0)) throw std::invalid_argument("channel base tick must be > 0");
}

std::int64_t ChannelConfig::delay_ticks() const { return std::llround(delay / base_tick); }

std::int64_t ChannelConfig::sample_period_ticks() const {
  return std::max<std::int64_t>(1, std::llround(1.0 / (sample_rate * base_tick)));
}

ChannelState make_channel_state(const Eigen::VectorXd& neutral) {
  ChannelState s;
  s.held_value = neutral;
  return s;
}

const Eigen::VectorXd& channel_advance(const ChannelConfig& cfg, ChannelState& state,
                                       const Eigen::VectorXd& input, double now) {
  const auto capacity = static_cast<std::size_t>(cfg.delay_ticks()) + 1;
  state.ring.push_back(input);
  const bool filled = state.ring.size() >= capacity;
  // Comparing in ticks keeps the hold period exact despite rounding in `now`.
  const double period = static_cast<double>(cfg.sample_period_ticks()) * cfg.base_tick;
  const bool due = !state.sampled || now - state.last_sample_time >= period - 0.5 * cfg.base_tick;
  if (due) {
    if (filled) state.held_value = state.ring.front();
    state.last_sample_time = now;
    state.sampled = true;
  }
  while (state.ring.size() >= capacity) state.ring.pop_front();
  return state.held_value;
}

std::pair<Eigen::VectorXd, ChannelState> channel_step(const ChannelConfig& cfg,
                                                      ChannelState state,
                                                      const Eigen::VectorXd& input, double now) {
  Eigen::VectorXd out = channel_advance(cfg, state, input, now);
  return {std::move(out), std::move(state)};
}

ChannelState reconfigure_channel(const ChannelState& state) {
  ChannelState s = make_channel_state(state.held_value);
  return s;
}

}  // namespace fic_teleop
