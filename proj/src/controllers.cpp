#include "fic_teleop/controllers.hpp"

#include <stdexcept>

namespace fic_teleop {

using Eigen::VectorXd;

namespace {

VectorXd padded(const VectorXd& v, Eigen::Index n) {
  if (v.size() == n) return v;
  if (v.size() > n) throw std::invalid_argument("vector longer than the task space");
  VectorXd out = VectorXd::Zero(n);
  out.head(v.size()) = v;
  return out;
}

struct TaskError {
  VectorXd pose;
  VectorXd vel;
  VectorXd err;
  VectorXd err_rate;
};

TaskError task_error(const ManipulatorModel& model, const TaskSpaceTerms& terms,
                     const JointState& js, const ReplicaInput& in) {
  const Eigen::Index n = model.task_dim();
  TaskError te;
  te.pose = forward_kinematics(model, js.q);
  te.vel = terms.J * js.qd;
  te.err = padded(in.x_desired, n) - te.pose;
  const VectorXd ref_rate =
      in.x_desired_rate.size() == 0 ? VectorXd::Zero(n) : padded(in.x_desired_rate, n);
  te.err_rate = ref_rate - te.vel;
  return te;
}

// Terms shared by every replica law: virtual force, bias compensation,
// null-space posture torque and gravity.
void compose(const ReplicaParams& p, const ManipulatorModel& model, const TaskSpaceTerms& terms,
             const JointState& js, const ReplicaInput& in, ReplicaCommand& cmd) {
  const Eigen::Index n = model.task_dim();
  const VectorXd f_v = in.f_v.size() == 0 ? VectorXd::Zero(n) : padded(in.f_v, n);
  cmd.task_force = f_v + cmd.stiffness_force + cmd.damping_force + terms.h;
  const VectorXd q_ref = p.q_ref.size() == 0 ? js.q : p.q_ref;
  const VectorXd tau_null = p.k_null * (q_ref - js.q) - p.d_null * js.qd;
  cmd.null_torque = terms.null_projector * tau_null;
  cmd.tau = terms.J.transpose() * cmd.task_force + cmd.null_torque + terms.g;
}

}  // namespace

MasterWrench master_wrench(const MasterParams& p, const std::vector<AxisErrorState>& axes,
                           const std::vector<AxisFicState>& states, const VectorXd& f_fb) {
  const std::size_t n = axes.size();
  if (p.fic.size() != n || states.size() != n || static_cast<std::size_t>(f_fb.size()) != n) {
    throw std::invalid_argument("master_wrench: axis count mismatch");
  }
  MasterWrench out;
  out.she = VectorXd::Zero(static_cast<Eigen::Index>(n));
  out.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const FicWrench w = fic_wrench(axes[i], states[i], p.fic[i]);
    out.she[static_cast<Eigen::Index>(i)] = w.force;
    out.states[i] = w.state;
  }
  out.feedback = p.k_a * f_fb;
  out.wrench = out.she + out.feedback;
  return out;
}

VectorXd virtual_force(double k_c, const VectorXd& master_err) { return k_c * master_err; }

TeleopCommand velocity_mode_update(const TeleopCommand& cmd, double dt, double rate_gain) {
  TeleopCommand next = cmd;
  if (cmd.gripper_held) {
    next.x_desired.head(cmd.master_err.size()) += cmd.master_err * (rate_gain * dt);
  }
  return next;
}

IcParams ic_from_fic(const ReplicaParams& p, double damping_factor) {
  IcParams ic;
  const auto n = static_cast<Eigen::Index>(p.fic.size());
  ic.k.resize(n);
  ic.d.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ic.k[i] = p.fic[static_cast<std::size_t>(i)].k_0;
    ic.d[i] = damping_factor * p.fic[static_cast<std::size_t>(i)].d;
  }
  return ic;
}

ReplicaCommand replica_torque_fic(const ReplicaParams& p, const ManipulatorModel& model,
                                  const TaskSpaceTerms& terms, const JointState& js,
                                  const ReplicaInput& in,
                                  const std::vector<AxisFicState>& states) {
  const Eigen::Index n = model.task_dim();
  if (static_cast<Eigen::Index>(p.fic.size()) != n ||
      static_cast<Eigen::Index>(states.size()) != n) {
    throw std::invalid_argument("replica_torque_fic: need one FIC per task axis");
  }
  const TaskError te = task_error(model, terms, js, in);
  ReplicaCommand cmd;
  cmd.err = te.err;
  cmd.err_rate = te.err_rate;
  cmd.stiffness_force = VectorXd::Zero(n);
  cmd.damping_force = VectorXd::Zero(n);
  cmd.states.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const FicWrench w =
        fic_wrench(AxisErrorState{te.err[i], te.err_rate[i], te.vel[i]}, states[k], p.fic[k]);
    cmd.stiffness_force[i] = w.stiffness_force;
    cmd.damping_force[i] = w.damping_force;
    cmd.states[k] = w.state;
  }
  compose(p, model, terms, js, in, cmd);
  return cmd;
}

ReplicaCommand replica_torque_fic(const ReplicaParams& p, const ManipulatorModel& model,
                                  const JointState& js, const ReplicaInput& in,
                                  const std::vector<AxisFicState>& states) {
  return replica_torque_fic(p, model, task_space_terms(model, js), js, in, states);
}

ReplicaCommand replica_torque_ic(const IcParams& ic, const ReplicaParams& p,
                                 const ManipulatorModel& model, const TaskSpaceTerms& terms,
                                 const JointState& js, const ReplicaInput& in) {
  const Eigen::Index n = model.task_dim();
  if (ic.k.size() != n || ic.d.size() != n) {
    throw std::invalid_argument("replica_torque_ic: need one gain per task axis");
  }
  const TaskError te = task_error(model, terms, js, in);
  ReplicaCommand cmd;
  cmd.err = te.err;
  cmd.err_rate = te.err_rate;
  cmd.stiffness_force = ic.k.cwiseProduct(te.err);
  cmd.damping_force = -ic.d.cwiseProduct(te.vel);
  compose(p, model, terms, js, in, cmd);
  return cmd;
}

ReplicaCommand replica_torque_ic(const IcParams& ic, const ReplicaParams& p,
                                 const ManipulatorModel& model, const JointState& js,
                                 const ReplicaInput& in) {
  return replica_torque_ic(ic, p, model, task_space_terms(model, js), js, in);
}

}  // namespace fic_teleop
