#include "fic_teleop/operator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace fic_teleop {

using Eigen::Vector2d;

std::string to_string(ScriptKind kind) {
  switch (kind) {
    case ScriptKind::kIdle: return "idle";
    case ScriptKind::kImpulses: return "impulses";
    case ScriptKind::kObjectTouch: return "object_touch";
    case ScriptKind::kButtonPress: return "button_press";
    case ScriptKind::kRecorded: return "recorded";
  }
  return "idle";
}

ScriptKind script_kind_from_string(const std::string& name) {
  for (auto k : {ScriptKind::kIdle, ScriptKind::kImpulses, ScriptKind::kObjectTouch,
                 ScriptKind::kButtonPress, ScriptKind::kRecorded}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

std::string to_string(PressPhase phase) {
  switch (phase) {
    case PressPhase::kApproach: return "approach";
    case PressPhase::kSettle: return "settle";
    case PressPhase::kPress: return "press";
    case PressPhase::kRelease: return "release";
    case PressPhase::kDone: return "done";
    case PressPhase::kFailed: return "failed";
  }
  return "approach";
}

OperatorProfile expert_profile() {
  OperatorProfile p;
  p.name = "expert";
  p.move_speed = 0.08;
  p.kp = 0.004;
  p.kd = 0.0005;
  p.settle_tol = 0.006;
  p.settle_time = 0.15;
  p.release_rate = 0.1;
  return p;
}

OperatorProfile conservative_profile() { return OperatorProfile{}; }

OperatorProfile profile_from_name(const std::string& name) {
  if (name == "expert") return expert_profile();
  if (name == "conservative") return conservative_profile();
  throw std::invalid_argument("unknown operator profile '" + name + "'");
}

void OperatorScript::validate() const {
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if (!(waypoints[i].t > waypoints[i - 1].t)) {
      throw std::invalid_argument("waypoint times must be strictly increasing");
    }
  }
  for (std::size_t i = 0; i < impulses.size(); ++i) {
    if (!(impulses[i].duration > 0.0)) throw std::invalid_argument("impulse durations must be > 0");
    if (i > 0 && !(impulses[i].t > impulses[i - 1].t)) {
      throw std::invalid_argument("impulse times must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < recorded.size(); ++i) {
    if (recorded[i].tick < recorded[i - 1].tick) {
      throw std::invalid_argument("recorded command ticks must be non-decreasing");
    }
  }
  if (kind == ScriptKind::kButtonPress && buttons.empty()) {
    throw std::invalid_argument("button_press scenario needs at least one button");
  }
}

Vector2d clamp_to_workspace(const Vector2d& v, double radius) {
  const double n = v.norm();
  return n > radius ? Vector2d(v * (radius / n)) : v;
}

OperatorScript impulse_protocol(std::uint64_t seed) {
  OperatorScript s;
  s.kind = ScriptKind::kImpulses;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < kImpulseCount; ++i) {
    const double a = angle(rng);
    s.impulses.push_back(ImpulseSpec{1.0 + kImpulseSpacing * i,
                                     kImpulsePeak * Vector2d(std::cos(a), std::sin(a)),
                                     kImpulseDuration});
  }
  return s;
}

OperatorScript object_touch_protocol(const ContactObject& obj, const Vector2d& start_pose) {
  Vector2d top;
  if (obj.kind == SurfaceKind::kBox) {
    top = Vector2d(0.5 * (obj.box_min.x() + obj.box_max.x()), obj.box_max.y());
  } else {
    top = obj.point;
  }
  const Vector2d hover = top + Vector2d(0.0, 0.01);
  const double speed = 0.05;
  const double t_arrive = 0.5 + (hover - start_pose).norm() / speed;
  const Vector2d press(0.0, -0.06);

  OperatorScript s;
  s.kind = ScriptKind::kObjectTouch;
  s.start_pose = start_pose;
  s.waypoints = {
      {0.5, start_pose, false, Vector2d::Zero(), false},
      {t_arrive, hover, false, Vector2d::Zero(), false},
      {t_arrive + 0.5, hover, false, Vector2d::Zero(), true},
      {t_arrive + 2.0, hover, false, press, true},
      {t_arrive + 4.0, hover, false, press, true},
      // Operator lets go of the master while still in contact.
      {t_arrive + 4.0001, hover, false, Vector2d::Zero(), false},
      {t_arrive + 10.0, hover, false, Vector2d::Zero(), false},
  };
  return s;
}

OperatorScript button_press_protocol(const std::vector<Vector2d>& button_tops,
                                     const Vector2d& start_pose, const OperatorProfile& profile) {
  if (button_tops.empty()) throw std::invalid_argument("button_press_protocol needs buttons");
  OperatorScript s;
  s.kind = ScriptKind::kButtonPress;
  s.buttons = button_tops;
  s.start_pose = start_pose;
  s.profile = profile;
  // Nominal approach waypoints (hover points); presses are reactive.
  double t = 0.0;
  Vector2d from = start_pose;
  s.waypoints.push_back({t, from, false, Vector2d::Zero(), false});
  for (const auto& top : button_tops) {
    const Vector2d hover = top + Vector2d(0.0, profile.hover);
    t += std::max((hover - from).norm() / profile.move_speed, 1e-3);
    s.waypoints.push_back({t, hover, false, Vector2d::Zero(), false});
    from = hover;
  }
  return s;
}

Vector2d impulse_force(const std::vector<ImpulseSpec>& impulses, double t) {
  Vector2d f = Vector2d::Zero();
  for (const auto& imp : impulses) {
    const double local = t - imp.t;
    if (local >= 0.0 && local < imp.duration) {
      f += imp.wrench * std::sin(std::numbers::pi * local / imp.duration);
    }
  }
  return f;
}

namespace {

OperatorOutput waypoint_output(const std::vector<Waypoint>& wps, double t) {
  OperatorOutput out;
  if (wps.empty() || t < wps.front().t) return out;
  auto next = std::upper_bound(wps.begin(), wps.end(), t,
                               [](double v, const Waypoint& w) { return v < w.t; });
  const Waypoint& a = *std::prev(next);
  if (next == wps.end()) {
    out.pose_target = a.target;
    out.gripper_held = a.gripper_held;
    out.master_err = a.master_err;
    out.master_held = a.master_held;
    return out;
  }
  const Waypoint& b = *next;
  const double s = (t - a.t) / (b.t - a.t);
  out.pose_target = Vector2d(a.target + s * (b.target - a.target));
  out.master_err = clamp_to_workspace(a.master_err + s * (b.master_err - a.master_err));
  out.gripper_held = a.gripper_held;
  out.master_held = a.master_held;
  return out;
}

Vector2d hover_point(const OperatorScript& script, std::size_t i) {
  return script.buttons[i] + Vector2d(0.0, script.profile.hover);
}

void begin_segment(const OperatorScript& script, OperatorState& st, const Vector2d& to,
                   double t) {
  st.phase = PressPhase::kApproach;
  st.phase_start = t;
  st.segment_from = st.pose_target;
  st.segment_to = to;
  st.segment_duration = (to - st.segment_from).norm() / script.profile.move_speed;
}

bool observed_active(const ObservedFeedback& fb, std::size_t i) {
  return i < fb.buttons.size() && fb.buttons[i];
}

OperatorOutput button_press_step(const OperatorScript& script, OperatorState& st,
                                 const ObservedFeedback& fb, double t, double dt) {
  const OperatorProfile& prof = script.profile;
  if (!st.started) {
    st.started = true;
    st.pose_target = script.start_pose;
    st.activation_seen.assign(script.buttons.size(), -1.0);
    begin_segment(script, st, hover_point(script, 0), t);
  }
  switch (st.phase) {
    case PressPhase::kApproach: {
      const double s = st.segment_duration > 0.0
                           ? std::clamp((t - st.phase_start) / st.segment_duration, 0.0, 1.0)
                           : 1.0;
      st.pose_target = st.segment_from + s * (st.segment_to - st.segment_from);
      if (s >= 1.0) {
        st.phase = PressPhase::kSettle;
        st.phase_start = t;
        st.settle_since = -1.0;
      }
      break;
    }
    case PressPhase::kSettle: {
      if ((fb.ee_pose - hover_point(script, st.button)).norm() <= prof.settle_tol) {
        if (st.settle_since < 0.0) st.settle_since = t;
        if (t - st.settle_since >= prof.settle_time) {
          st.phase = PressPhase::kPress;
          st.phase_start = t;
          st.disp.setZero();
          st.last_force = fb.force.y();
        }
      } else {
        st.settle_since = -1.0;
      }
      break;
    }
    case PressPhase::kPress: {
      const double force = fb.force.y();
      const double err = prof.press_force - force;
      double y = st.disp.y() - prof.kp * err * dt + prof.kd * (force - st.last_force);
      st.last_force = force;
      st.disp.y() = std::clamp(y, -kMasterWorkspaceRadius, 0.0);
      if (observed_active(fb, st.button)) {
        st.activation_seen[st.button] = t;
        st.phase = PressPhase::kRelease;
        st.phase_start = t;
      } else if (t - st.phase_start > prof.press_timeout) {
        st.phase = PressPhase::kFailed;
        st.phase_start = t;
        st.disp.setZero();
      }
      break;
    }
    case PressPhase::kRelease: {
      const double step = prof.release_rate * dt;
      const double n = st.disp.norm();
      st.disp = n <= step ? Vector2d::Zero() : Vector2d(st.disp * ((n - step) / n));
      if (st.disp.isZero(0.0) && !observed_active(fb, st.button) && fb.force.norm() < 1.0) {
        ++st.button;
        if (st.button >= script.buttons.size()) {
          st.phase = PressPhase::kDone;
          st.phase_start = t;
        } else {
          begin_segment(script, st, hover_point(script, st.button), t);
        }
      }
      break;
    }
    case PressPhase::kDone:
    case PressPhase::kFailed:
      break;
  }
  OperatorOutput out;
  out.pose_target = st.pose_target;
  out.master_err = clamp_to_workspace(st.disp);
  // The hand stays on the master for the whole task so stale feedback cannot
  // push the free device around.
  out.master_held = true;
  return out;
}

}  // namespace

OperatorOutput step_operator(const OperatorScript& script, OperatorState& state,
                             const ObservedFeedback& observed, double t, double dt) {
  switch (script.kind) {
    case ScriptKind::kIdle:
      return OperatorOutput{};
    case ScriptKind::kImpulses: {
      OperatorOutput out;
      out.external_impulse = impulse_force(script.impulses, t);
      return out;
    }
    case ScriptKind::kObjectTouch:
      return waypoint_output(script.waypoints, t);
    case ScriptKind::kButtonPress:
      return button_press_step(script, state, observed, t, dt);
    case ScriptKind::kRecorded: {
      const auto tick = static_cast<std::int64_t>(std::llround(t / dt));
      const auto& rec = script.recorded;
      while (state.cursor < rec.size() && rec[state.cursor].tick <= tick) ++state.cursor;
      if (state.cursor == 0) return OperatorOutput{};
      return rec[state.cursor - 1].command;
    }
  }
  return OperatorOutput{};
}

bool script_finished(const OperatorScript& script, const OperatorState& state) {
  return script.kind == ScriptKind::kButtonPress &&
         (state.phase == PressPhase::kDone || state.phase == PressPhase::kFailed);
}

}  // namespace fic_teleop
