#pragma once

// Master wrench law, FIC replica torque law, and the constant-stiffness
// impedance controller used as the comparison baseline.

#include "fic_teleop/dynamics.hpp"
#include "fic_teleop/fic_core.hpp"

#include <Eigen/Dense>

#include <vector>

namespace fic_teleop {

struct MasterParams {
  std::vector<FicParams> fic;  // one per master axis
  double k_a = 1.0;            // feedback scaling
};

struct MasterWrench {
  Eigen::VectorXd she;       // safety/haptic-enhancement FIC component
  Eigen::VectorXd feedback;  // k_a * F_FB
  Eigen::VectorXd wrench;
  std::vector<AxisFicState> states;
};

/// W_M = FIC_SHE(x_M) + k_a F_FB. `axes` carries the master displacement
/// error (home - x_M), its rate, and the master velocity per axis.
MasterWrench master_wrench(const MasterParams& p, const std::vector<AxisErrorState>& axes,
                           const std::vector<AxisFicState>& states,
                           const Eigen::VectorXd& f_fb);

Eigen::VectorXd virtual_force(double k_c, const Eigen::VectorXd& master_err);

struct TeleopCommand {
  Eigen::VectorXd master_err;
  bool gripper_held = false;
  Eigen::VectorXd x_desired;
};

inline constexpr double kDefaultRateGain = 1.0;  // 1/s

/// Velocity-control mode: while the gripper is held the replica reference
/// integrates the master displacement.
TeleopCommand velocity_mode_update(const TeleopCommand& cmd, double dt,
                                   double rate_gain = kDefaultRateGain);

struct ReplicaParams {
  std::vector<FicParams> fic;  // one per task axis
  double k_c = 200.0;          // N/m of virtual force per metre of master displacement
  double k_null = 5.0;         // N*m/rad
  double d_null = 1.0;         // N*m*s/rad
  Eigen::VectorXd q_ref;       // null-space posture
};

struct IcParams {
  Eigen::VectorXd k;
  Eigen::VectorXd d;
};

inline constexpr double kIcDampingFactor = 8.0;

/// IC baseline sharing K_0 with the FIC and using a multiple of its damping.
IcParams ic_from_fic(const ReplicaParams& p, double damping_factor = kIcDampingFactor);

/// What the replica receives over the channel.
struct ReplicaInput {
  Eigen::VectorXd x_desired;
  Eigen::VectorXd x_desired_rate;
  Eigen::VectorXd f_v;
};

struct ReplicaCommand {
  Eigen::VectorXd tau;
  Eigen::VectorXd err;              // x_desired - pose
  Eigen::VectorXd err_rate;         // x_desired_rate - task velocity
  Eigen::VectorXd stiffness_force;  // impedance spring term
  Eigen::VectorXd damping_force;    // impedance damping term
  Eigen::VectorXd task_force;       // f_v + spring + damping + h
  Eigen::VectorXd null_torque;      // N^T tau_null
  std::vector<AxisFicState> states;
};

ReplicaCommand replica_torque_fic(const ReplicaParams& p, const ManipulatorModel& model,
                                  const TaskSpaceTerms& terms, const JointState& js,
                                  const ReplicaInput& in,
                                  const std::vector<AxisFicState>& states);

ReplicaCommand replica_torque_fic(const ReplicaParams& p, const ManipulatorModel& model,
                                  const JointState& js, const ReplicaInput& in,
                                  const std::vector<AxisFicState>& states);

/// Same structure as the FIC law; ReplicaParams provides k_c and the null-space
/// gains, IcParams the constant task-space stiffness and damping.
ReplicaCommand replica_torque_ic(const IcParams& ic, const ReplicaParams& p,
                                 const ManipulatorModel& model, const TaskSpaceTerms& terms,
                                 const JointState& js, const ReplicaInput& in);

ReplicaCommand replica_torque_ic(const IcParams& ic, const ReplicaParams& p,
                                 const ManipulatorModel& model, const JointState& js,
                                 const ReplicaInput& in);

}  // namespace fic_teleop
