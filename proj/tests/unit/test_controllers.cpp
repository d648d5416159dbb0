#include <gtest/gtest.h>

#include <random>

#include "fic_teleop/controllers.hpp"

using namespace fic_teleop;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

MasterParams master_params() {
  MasterParams p;
  p.fic = {calibrate(4.0, 0.01, 200.0, 0.0), calibrate(4.0, 0.01, 200.0, 0.0)};
  p.k_a = 1.0;
  return p;
}

ReplicaParams replica_params(const VectorXd& q_ref) {
  ReplicaParams p;
  p.fic = {calibrate(20.0, 0.05, 300.0, 2.0), calibrate(20.0, 0.05, 300.0, 2.0)};
  p.k_c = 200.0;
  p.k_null = 10.0;
  p.d_null = 2.0;
  p.q_ref = q_ref;
  return p;
}

}  // namespace

TEST(MasterWrench, ZeroAtRest) {
  const auto w = master_wrench(master_params(), {{}, {}}, {{}, {}}, Vector2d::Zero());
  EXPECT_EQ(w.wrench.norm(), 0.0);
}

TEST(MasterWrench, FeedbackScaling) {
  const auto w = master_wrench(master_params(), {{}, {}}, {{}, {}}, Vector2d(0, -5));
  EXPECT_EQ(w.feedback, Vector2d(0, -5));
  EXPECT_EQ(w.wrench, Vector2d(0, -5));
}

TEST(MasterWrench, SheSaturates) {
  const MasterParams p = master_params();
  const auto w = master_wrench(p, {{0.05, 0.0, 0.0}, {-0.02, 0.0, 0.0}}, {{}, {}}, Vector2d::Zero());
  EXPECT_DOUBLE_EQ(w.she[0], 4.0);
  EXPECT_DOUBLE_EQ(w.she[1], -4.0);
}

TEST(MasterWrench, RejectsAxisMismatch) {
  EXPECT_THROW(master_wrench(master_params(), {{}}, {{}}, VectorXd::Zero(1)), std::invalid_argument);
}

TEST(VirtualForce, LinearGain) {
  EXPECT_EQ(virtual_force(100.0, Vector2d::Zero()).norm(), 0.0);
  EXPECT_TRUE(virtual_force(100.0, Vector2d(0.02, 0)).isApprox(Vector2d(2, 0), 1e-15));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int i = 0; i < 100; ++i) {
    const Vector2d a(n(rng), n(rng));
    const Vector2d b(n(rng), n(rng));
    EXPECT_LE((virtual_force(73.0, a + b) - virtual_force(73.0, a) - virtual_force(73.0, b)).norm(), 1e-12);
  }
}

TEST(VelocityMode, Examples) {
  TeleopCommand released{Vector2d(0.1, 0), false, Vector2d(0.3, 0.2)};
  EXPECT_EQ(velocity_mode_update(released, 1e-3).x_desired, Vector2d(0.3, 0.2));

  TeleopCommand idle{Vector2d::Zero(), true, Vector2d(0.3, 0.2)};
  EXPECT_EQ(velocity_mode_update(idle, 1e-3).x_desired, Vector2d(0.3, 0.2));

  TeleopCommand held{Vector2d(0.1, 0), true, Vector2d(0.3, 0.2)};
  for (int i = 0; i < 1000; ++i) held = velocity_mode_update(held, 1e-3, 1.0);
  // Oracle: 1000 increments of 0.1 * 1e-3.
  double x = 0.3;
  for (int i = 0; i < 1000; ++i) x += 0.1 * 1e-3;
  EXPECT_NEAR(held.x_desired[0], x, 1e-15);
  EXPECT_NEAR(held.x_desired[0], 0.4, 1e-12);
  EXPECT_DOUBLE_EQ(held.x_desired[1], 0.2);
}

TEST(ReplicaFic, PureGravityCompensationAtRest) {
  const auto model = planar_3link();
  const VectorXd q = Eigen::Vector3d(1.15, -1.3, -1.1);
  const JointState js{q, VectorXd::Zero(3)};
  const ReplicaInput in{forward_kinematics(model, q), Vector2d::Zero(), Vector2d::Zero()};
  const auto cmd = replica_torque_fic(replica_params(q), model, js, in, {{}, {}});
  EXPECT_LE((cmd.tau - gravity_torque(model, q)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReplicaFic, StiffnessBoundedOnRandomStates) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto model = planar_3link();
  const VectorXd q0 = Eigen::Vector3d(1.15, -1.3, -1.1);
  const ReplicaParams p = replica_params(q0);
  std::vector<AxisFicState> states(2);
  for (int k = 0; k < 2000; ++k) {
    const JointState js{q0 + 0.3 * Eigen::Vector3d(u(rng), u(rng), u(rng)),
                        Eigen::Vector3d(u(rng), u(rng), u(rng))};
    const ReplicaInput in{Vector2d(0.4 + 0.3 * u(rng), 0.2 * u(rng)), Vector2d(u(rng), u(rng)),
                          Vector2d::Zero()};
    const auto cmd = replica_torque_fic(p, model, js, in, states);
    for (int i = 0; i < 2; ++i) {
      ASSERT_LE(std::abs(cmd.stiffness_force[i]), p.fic[i].w_max + p.fic[i].k_0 * p.fic[i].x_b + 1e-12);
    }
    states = cmd.states;
  }
}

TEST(ReplicaFic, NullTorqueDoesNotAccelerateEndEffector) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto model = planar_3link();
  const VectorXd q0 = Eigen::Vector3d(1.15, -1.3, -1.1);
  const ReplicaParams p = replica_params(q0);
  for (int k = 0; k < 200; ++k) {
    const JointState js{q0 + 0.5 * Eigen::Vector3d(u(rng), u(rng), u(rng)),
                        Eigen::Vector3d(u(rng), u(rng), u(rng))};
    const auto terms = task_space_terms(model, js);
    const auto cmd = replica_torque_fic(p, model, terms, js,
                                        {forward_kinematics(model, js.q), Vector2d::Zero(), Vector2d::Zero()},
                                        {{}, {}});
    EXPECT_LE((terms.J * terms.M_inv * cmd.null_torque).norm(), 1e-8);
  }
}

TEST(ReplicaIc, Examples) {
  const auto model = planar_3link();
  const VectorXd q = Eigen::Vector3d(1.15, -1.3, -1.1);
  const ReplicaParams p = replica_params(q);
  IcParams ic{Vector2d(100, 100), Vector2d(16, 16)};
  const JointState js{q, VectorXd::Zero(3)};
  const VectorXd x = forward_kinematics(model, q);

  const auto rest = replica_torque_ic(ic, p, model, js, {x, Vector2d::Zero(), Vector2d::Zero()});
  EXPECT_LE((rest.tau - gravity_torque(model, q)).cwiseAbs().maxCoeff(), 1e-12);

  const auto pushed =
      replica_torque_ic(ic, p, model, js, {x + Vector2d(0.1, 0), Vector2d::Zero(), Vector2d::Zero()});
  EXPECT_NEAR(pushed.stiffness_force[0], 10.0, 1e-12);
  EXPECT_NEAR(pushed.stiffness_force[1], 0.0, 1e-12);
}

TEST(ReplicaIc, SharesStiffnessScalesDamping) {
  const ReplicaParams p = replica_params(VectorXd());
  const IcParams ic = ic_from_fic(p);
  EXPECT_EQ(ic.k, Vector2d(300, 300));
  EXPECT_EQ(ic.d, Vector2d(16, 16));
}
