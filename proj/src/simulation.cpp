#include "fic_teleop/simulation.hpp"

#include <spdlog/spdlog.h>

#include <cmath>

namespace fic_teleop {

using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

const char* axis_name(int i) {
  static const char* names[] = {"x", "y", "a"};
  return names[i];
}

std::vector<std::string> log_columns(const ManipulatorModel& model, std::size_t n_buttons) {
  const int n = model.task_dim();
  std::vector<std::string> c{"t"};
  auto per_axis = [&](const std::string& prefix) {
    for (int i = 0; i < n; ++i) c.push_back(prefix + axis_name(i));
  };
  auto planar = [&](const std::string& prefix) {
    c.push_back(prefix + "x");
    c.push_back(prefix + "y");
  };
  for (int i = 0; i < model.dof(); ++i) c.push_back("q_" + std::to_string(i));
  for (int i = 0; i < model.dof(); ++i) c.push_back("qd_" + std::to_string(i));
  per_axis("ee_");
  per_axis("ee_v");
  per_axis("xd_");
  per_axis("xd_rate_");
  per_axis("xd_cmd_");
  planar("master_");
  planar("master_v");
  planar("cmd_err_");
  c.push_back("master_held");
  c.push_back("gripper_held");
  per_axis("fv_pre_");
  per_axis("fv_post_");
  planar("ffb_pre_");
  planar("ffb_post_");
  planar("hammer_");
  planar("contact_");
  per_axis("err_");
  per_axis("stiff_");
  per_axis("damp_");
  per_axis("task_");
  per_axis("phase_");
  per_axis("xmax_");
  per_axis("stored_");
  planar("master_she_");
  c.push_back("port_power");
  for (std::size_t i = 0; i < n_buttons; ++i) c.push_back("button_" + std::to_string(i));
  c.push_back("op_phase");
  c.push_back("op_button");
  return c;
}

VectorXd padded(const Vector2d& v, int n) {
  VectorXd out = VectorXd::Zero(n);
  out.head<2>() = v;
  return out;
}

}  // namespace

Simulation::Simulation(SimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  try {
    script_ = build_script(cfg_);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  objects_ = scenario_objects(cfg_);
  latches_.assign(objects_.size(), ButtonLatch{});
  ic_ = ic_from_fic(cfg_.replica.params, cfg_.replica.ic_damping_factor);
  master_params_.fic = cfg_.master.fic;
  master_params_.k_a = cfg_.master.k_a;

  const int n = cfg_.model.task_dim();
  js_.q = cfg_.initial_q;
  js_.qd = VectorXd::Zero(cfg_.model.dof());
  master_.fic.assign(2, AxisFicState{});
  replica_fic_.assign(static_cast<std::size_t>(n), AxisFicState{});
  const VectorXd pose = forward_kinematics(cfg_.model, js_.q);
  x_desired_cmd_ = pose;
  x_desired_prev_ = pose;

  std::size_t n_buttons = 0;
  for (const auto& o : objects_) n_buttons += o.is_button ? 1 : 0;
  channels_ = cfg_.channels;
  VectorXd fb_neutral = VectorXd::Zero(4 + static_cast<Eigen::Index>(n_buttons));
  fb_neutral.segment<2>(2) = pose.head<2>();
  ch_f_fb_ = make_channel_state(fb_neutral);
  ch_f_v_ = make_channel_state(VectorXd::Zero(n));
  ch_x_d_ = make_channel_state(pose);

  observed_.ee_pose = pose.head<2>();
  observed_.buttons.assign(n_buttons, false);

  last_.x_desired_cmd = pose;
  last_.x_desired = pose;
  last_.x_desired_rate = VectorXd::Zero(n);
  last_.f_v_pre = VectorXd::Zero(n);
  last_.f_v_post = VectorXd::Zero(n);
  last_.replica.err = VectorXd::Zero(n);
  last_.replica.stiffness_force = VectorXd::Zero(n);
  last_.replica.damping_force = VectorXd::Zero(n);
  last_.replica.task_force = VectorXd::Zero(n);
  last_.replica.states = replica_fic_;
  last_.master_she = VectorXd::Zero(2);

  max_ticks_ = static_cast<std::int64_t>(std::llround(cfg_.duration / cfg_.dt));
  log_ = ExperimentLog(log_columns(cfg_.model, n_buttons));
  row_.resize(log_.columns().size());
  append_row();
}

VectorXd Simulation::ee_pose() const { return forward_kinematics(cfg_.model, js_.q); }

void Simulation::enable_recording() {
  recording_ = true;
  cfg_.scenario.kind = ScriptKind::kRecorded;
  script_.kind = ScriptKind::kRecorded;
  // A recorded scenario has no default objects; keep the scene explicit.
  cfg_.objects = objects_;
}

void Simulation::end_at_current_tick() {
  if (tick_ == 0) return;
  cfg_.duration = time();
  max_ticks_ = tick_;
}

void Simulation::set_channel(Stream stream, const ChannelConfig& c) {
  ChannelConfig cc = c;
  cc.base_tick = cfg_.dt;
  cc.validate();
  cfg_.channel_events.push_back(ChannelEvent{tick_, stream, cc});
}

void Simulation::apply_channel_events() {
  const auto& events = cfg_.channel_events;
  while (event_cursor_ < events.size() && events[event_cursor_].tick <= tick_) {
    const ChannelEvent& ev = events[event_cursor_++];
    channels_.get(ev.stream) = ev.config;
    switch (ev.stream) {
      case Stream::kForceFeedback: ch_f_fb_ = reconfigure_channel(ch_f_fb_); break;
      case Stream::kVirtualForce: ch_f_v_ = reconfigure_channel(ch_f_v_); break;
      case Stream::kDesiredPose: ch_x_d_ = reconfigure_channel(ch_x_d_); break;
    }
  }
}

OperatorOutput Simulation::scripted_command() {
  return step_operator(script_, op_state_, observed_, time(), cfg_.dt);
}

const StepRecord& Simulation::step() { return step(scripted_command()); }

const StepRecord& Simulation::step(const OperatorOutput& command) {
  if (recording_ && (!last_recorded_ || *last_recorded_ != command)) {
    cfg_.scenario.recorded.push_back(RecordedCommand{tick_, command});
    last_recorded_ = command;
  }
  apply_channel_events();

  const double dt = cfg_.dt;
  const double t = time();
  const ManipulatorModel& model = cfg_.model;
  const int n = model.task_dim();
  StepRecord rec;
  rec.command = command;
  rec.command.master_err = clamp_to_workspace(command.master_err);
  const OperatorOutput& cmd = rec.command;

  try {
    // Master device: admittance-simulated mass under the hand and W_M.
    std::vector<AxisErrorState> axes(2);
    for (int i = 0; i < 2; ++i) axes[i] = AxisErrorState{-master_.x[i], -master_.v[i], master_.v[i]};
    const MasterWrench mw = master_wrench(master_params_, axes, master_.fic, f_fb_observed_);
    master_.fic = mw.states;
    Vector2d f_hand = Vector2d::Zero();
    if (cmd.master_held) {
      f_hand = cfg_.master.hand_stiffness * (cmd.master_err - master_.x) -
               cfg_.master.hand_damping * master_.v;
    }
    master_.v += (f_hand + mw.wrench) / cfg_.master.mass * dt;
    master_.x += master_.v * dt;
    // Mechanical end stop of the device: no motion past the workspace disc.
    const double r = master_.x.norm();
    if (r > kMasterWorkspaceRadius) {
      const Vector2d u = master_.x / r;
      master_.x = u * kMasterWorkspaceRadius;
      const double outward = master_.v.dot(u);
      if (outward > 0.0) master_.v -= outward * u;
    }
    rec.master_she = mw.she;

    // Reference pose: GUI target and nudges, then velocity mode.
    if (cmd.pose_target) x_desired_cmd_.head<2>() = *cmd.pose_target;
    x_desired_cmd_.head<2>() += cmd.pose_nudge * dt;
    const TeleopCommand tc{padded(master_.x, n), cmd.gripper_held, x_desired_cmd_};
    x_desired_cmd_ = velocity_mode_update(tc, dt, cfg_.master.rate_gain).x_desired;
    rec.x_desired_cmd = x_desired_cmd_;
    // In velocity mode the master displacement moves the reference instead of
    // pushing the end-effector.
    rec.f_v_pre = cmd.gripper_held ? VectorXd::Zero(n)
                                   : padded(virtual_force(cfg_.replica.params.k_c, master_.x), n);

    rec.f_v_post = channel_advance(channels_.f_v, ch_f_v_, rec.f_v_pre, t);
    rec.x_desired = channel_advance(channels_.x_d, ch_x_d_, x_desired_cmd_, t);
    rec.x_desired_rate = (rec.x_desired - x_desired_prev_) / dt;

    // Replica controller.
    const TaskSpaceTerms terms = task_space_terms(model, js_);
    const ReplicaInput in{rec.x_desired, rec.x_desired_rate, rec.f_v_post};
    if (cfg_.controller == ControllerKind::kFic) {
      rec.replica = replica_torque_fic(cfg_.replica.params, model, terms, js_, in, replica_fic_);
      replica_fic_ = rec.replica.states;
    } else {
      rec.replica = replica_torque_ic(ic_, cfg_.replica.params, model, terms, js_, in);
      rec.replica.states = replica_fic_;
    }

    // Environment.
    const VectorXd pose = forward_kinematics(model, js_.q);
    const Vector2d ee = pose.head<2>();
    const Vector2d ee_v = (terms.J * js_.qd).head<2>();
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      const ContactResult cr = contact_wrench(objects_[i], ee, ee_v);
      rec.contact += cr.wrench;
      if (objects_[i].is_button) latches_[i] = update_button(objects_[i], latches_[i], cr.normal_force, t);
    }
    rec.hammer = cmd.external_impulse;
    rec.f_fb_pre = rec.contact + rec.hammer;

    const JointState next = integrate_step(model, js_, rec.replica.tau, rec.f_fb_pre, dt, terms);
    const VectorXd pose_next = forward_kinematics(model, next.q);

    // Work of the impedance terms over the step. The spring acts on the
    // error, so its port velocity is relative to the moving reference.
    const VectorXd dx = pose_next - pose;
    const VectorXd dxd = rec.x_desired - x_desired_prev_;
    rec.port_work = rec.replica.stiffness_force.dot(dx - dxd) + rec.replica.damping_force.dot(dx);
    interval_work_ += rec.port_work;

    // Measured feedback back through its channel.
    VectorXd payload(4 + static_cast<Eigen::Index>(observed_.buttons.size()));
    payload.head<2>() = rec.f_fb_pre;
    payload.segment<2>(2) = pose_next.head<2>();
    Eigen::Index b = 4;
    for (std::size_t i = 0; i < objects_.size(); ++i) {
      if (objects_[i].is_button) payload[b++] = latches_[i].active ? 1.0 : 0.0;
    }
    const VectorXd& fb = channel_advance(channels_.f_fb, ch_f_fb_, payload, t);
    rec.f_fb_post = fb.head<2>();
    f_fb_observed_ = rec.f_fb_post;
    observed_.force = rec.f_fb_post;
    observed_.ee_pose = fb.segment<2>(2);
    for (std::size_t i = 0; i < observed_.buttons.size(); ++i) {
      observed_.buttons[i] = fb[4 + static_cast<Eigen::Index>(i)] > 0.5;
    }

    js_ = next;
    x_desired_prev_ = rec.x_desired;
  } catch (const SimulationAbort&) {
    throw;
  } catch (const std::exception& e) {
    throw SimulationAbort("simulation aborted at t=" + format_number(t) + ": " + e.what(),
                          [this] {
                            ExperimentLog tail = log_;
                            tail.keep_tail(kLogTailRows);
                            return to_csv(tail);
                          }());
  }

  ++tick_;
  rec.t = time();
  last_ = std::move(rec);
  if (script_finished(script_, op_state_) && done_time_ < 0.0) done_time_ = time();
  if (tick_ % cfg_.log_every == 0) append_row();
  check_finite();
  return last_;
}

void Simulation::append_row() {
  const int nq = cfg_.model.dof();
  const int n = cfg_.model.task_dim();
  std::size_t k = 0;
  auto put = [&](double v) { row_[k++] = v; };
  auto put_vec = [&](const VectorXd& v, int count) {
    for (int i = 0; i < count; ++i) put(i < v.size() ? v[i] : 0.0);
  };
  const TaskState ts = task_state(cfg_.model, js_);
  const StepRecord& r = last_;
  put(time());
  put_vec(js_.q, nq);
  put_vec(js_.qd, nq);
  put_vec(ts.pose, n);
  put_vec(ts.vel, n);
  put_vec(r.x_desired, n);
  put_vec(r.x_desired_rate, n);
  put_vec(r.x_desired_cmd, n);
  put_vec(master_.x, 2);
  put_vec(master_.v, 2);
  put_vec(r.command.master_err, 2);
  put(r.command.master_held ? 1.0 : 0.0);
  put(r.command.gripper_held ? 1.0 : 0.0);
  put_vec(r.f_v_pre, n);
  put_vec(r.f_v_post, n);
  put_vec(r.f_fb_pre, 2);
  put_vec(r.f_fb_post, 2);
  put_vec(r.hammer, 2);
  put_vec(r.contact, 2);
  put_vec(r.replica.err, n);
  put_vec(r.replica.stiffness_force, n);
  put_vec(r.replica.damping_force, n);
  put_vec(r.replica.task_force, n);
  for (int i = 0; i < n; ++i) {
    put(r.replica.states[static_cast<std::size_t>(i)].phase == Phase::kConvergence ? 1.0 : 0.0);
  }
  for (int i = 0; i < n; ++i) put(r.replica.states[static_cast<std::size_t>(i)].x_max_err);
  for (int i = 0; i < n; ++i) put(r.replica.states[static_cast<std::size_t>(i)].stored_energy);
  put_vec(r.master_she, 2);
  // Mean power over the interval since the previous row.
  const double interval = tick_ == 0 ? 0.0 : cfg_.log_every * cfg_.dt;
  put(interval > 0.0 ? interval_work_ / interval : 0.0);
  interval_work_ = 0.0;
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    if (objects_[i].is_button) put(latches_[i].active ? 1.0 : 0.0);
  }
  put(static_cast<double>(static_cast<int>(op_state_.phase)));
  put(static_cast<double>(op_state_.button));
  log_.add_row(row_);
}

void Simulation::check_finite() {
  if (js_.q.allFinite() && js_.qd.allFinite() && master_.x.allFinite() && master_.v.allFinite()) {
    return;
  }
  ExperimentLog tail = log_;
  tail.keep_tail(kLogTailRows);
  throw SimulationAbort("non-finite state at t=" + format_number(time()), to_csv(tail));
}

bool Simulation::finished() const {
  if (tick_ >= max_ticks_) return true;
  return done_time_ >= 0.0 && time() - done_time_ >= cfg_.stop_after_done - 0.5 * cfg_.dt;
}

const ExperimentLog& Simulation::log() {
  log_.set_meta("format", "fic_teleop experiment log v1");
  log_.set_meta("config", to_json(cfg_).dump());
  for (auto s : {Stream::kForceFeedback, Stream::kVirtualForce, Stream::kDesiredPose}) {
    const ChannelConfig& c = cfg_.channels.get(s);
    log_.set_meta("channel " + to_string(s),
                  "delay=" + format_number(c.delay) + " s, sample_rate=" + format_number(c.sample_rate) +
                      " Hz, events=" + std::to_string(std::count_if(
                                           cfg_.channel_events.begin(), cfg_.channel_events.end(),
                                           [s](const ChannelEvent& e) { return e.stream == s; })));
  }
  log_.set_meta("synthetic", "contact, master device and operator parameters are synthetic analogs");
  log_.set_meta("scenario", to_string(cfg_.scenario.kind));
  if (script_.kind == ScriptKind::kButtonPress) {
    log_.set_meta("operator_phase", to_string(op_state_.phase));
  }
  log_.set_meta("end_time", format_number(time()));
  return log_;
}

ExperimentLog Simulation::take_log() {
  log();
  return std::move(log_);
}

ExperimentLog run(const SimConfig& cfg) {
  Simulation sim(cfg);
  while (!sim.finished()) sim.step();
  return sim.take_log();
}

std::vector<GridResult> run_grid(const std::vector<SimConfig>& configs) {
  std::vector<GridResult> out;
  out.reserve(configs.size());
  for (const auto& cfg : configs) {
    GridResult r;
    r.config = cfg;
    try {
      r.log = run(cfg);
    } catch (const SimulationAbort& e) {
      r.error = e.what();
      spdlog::error("{}", e.what());
    } catch (const ConfigError& e) {
      r.error = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<SimConfig> grid_configs(const SimConfig& base, const std::vector<double>& delays,
                                    const std::vector<double>& rates) {
  std::vector<SimConfig> out;
  for (double rate : rates) {
    for (double delay : delays) {
      SimConfig c = base;
      c.channels = StreamChannels::uniform(delay, rate, base.dt);
      c.channel_events.clear();
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace fic_teleop
