#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>

#include "fic_teleop/dynamics.hpp"

using namespace fic_teleop;
using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

// --- Independent Lagrangian oracle -----------------------------------------
// Link centres of mass from a hand-written chain transform; kinetic and
// potential energy from those positions; M, c, g by finite differences.

std::vector<Vector2d> oracle_coms(const ManipulatorModel& m, const VectorXd& q) {
  std::vector<Vector2d> out;
  Vector2d joint = Vector2d::Zero();
  double angle = 0.0;
  for (int i = 0; i < m.dof(); ++i) {
    angle += q[i];
    const Vector2d u(std::cos(angle), std::sin(angle));
    out.push_back(joint + m.links[i].com * u);
    joint += m.links[i].length * u;
  }
  return out;
}

Vector2d oracle_tip(const ManipulatorModel& m, const VectorXd& q) {
  Vector2d p = Vector2d::Zero();
  double angle = 0.0;
  for (int i = 0; i < m.dof(); ++i) {
    angle += q[i];
    p += m.links[i].length * Vector2d(std::cos(angle), std::sin(angle));
  }
  return p;
}

double oracle_kinetic(const ManipulatorModel& m, const VectorXd& q, const VectorXd& qd) {
  const double h = 1e-6;
  const auto a = oracle_coms(m, q + h * qd);
  const auto b = oracle_coms(m, q - h * qd);
  double t = 0.0;
  double omega = 0.0;
  for (int i = 0; i < m.dof(); ++i) {
    omega += qd[i];
    const Vector2d v = (a[i] - b[i]) / (2 * h);
    const Link& l = m.links[i];
    t += 0.5 * l.mass * v.squaredNorm() + 0.5 * (l.inertia - l.mass * l.com * l.com) * omega * omega;
  }
  return t;
}

double oracle_potential(const ManipulatorModel& m, const VectorXd& q) {
  const auto c = oracle_coms(m, q);
  double v = 0.0;
  for (int i = 0; i < m.dof(); ++i) v -= m.links[i].mass * m.gravity.dot(c[i]);
  return v;
}

MatrixXd oracle_mass(const ManipulatorModel& m, const VectorXd& q) {
  const int n = m.dof();
  MatrixXd M(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const VectorXd ei = VectorXd::Unit(n, i);
      const VectorXd ej = VectorXd::Unit(n, j);
      M(i, j) = oracle_kinetic(m, q, ei + ej) - oracle_kinetic(m, q, ei) - oracle_kinetic(m, q, ej);
    }
  }
  return M;
}

VectorXd oracle_gravity(const ManipulatorModel& m, const VectorXd& q) {
  const double h = 1e-6;
  VectorXd g(m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const VectorXd e = VectorXd::Unit(m.dof(), i);
    g[i] = (oracle_potential(m, q + h * e) - oracle_potential(m, q - h * e)) / (2 * h);
  }
  return g;
}

// c = Mdot qd - 1/2 d/dq (qd^T M qd)
VectorXd oracle_bias(const ManipulatorModel& m, const VectorXd& q, const VectorXd& qd) {
  const double h = 1e-5;
  const MatrixXd Mdot = (oracle_mass(m, q + h * qd) - oracle_mass(m, q - h * qd)) / (2 * h);
  VectorXd grad(m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const VectorXd e = VectorXd::Unit(m.dof(), i);
    grad[i] = (qd.dot(oracle_mass(m, q + h * e) * qd) - qd.dot(oracle_mass(m, q - h * e) * qd)) / (2 * h);
  }
  return Mdot * qd - 0.5 * grad;
}

MatrixXd oracle_jacobian(const ManipulatorModel& m, const VectorXd& q) {
  const double h = 1e-6;
  MatrixXd J(2, m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const VectorXd e = VectorXd::Unit(m.dof(), i);
    J.col(i) = (oracle_tip(m, q + h * e) - oracle_tip(m, q - h * e)) / (2 * h);
  }
  return J;
}

VectorXd random_q(const ManipulatorModel& m, std::mt19937_64& rng) {
  VectorXd q(m.dof());
  for (int i = 0; i < m.dof(); ++i) {
    const double lo = m.limits.empty() ? -kPi : m.limits[i].lower;
    const double hi = m.limits.empty() ? kPi : m.limits[i].upper;
    q[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  return q;
}

VectorXd random_vec(int n, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

TEST(ForwardKinematics, Planar2R) {
  const auto m = planar_2link(1.0, 1.0);
  EXPECT_TRUE(forward_kinematics(m, Vector2d(0, 0)).isApprox(Vector2d(2, 0), 1e-12));
  EXPECT_NEAR((forward_kinematics(m, Vector2d(kPi / 2, 0)) - Vector2d(0, 2)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((forward_kinematics(m, Vector2d(kPi / 2, -kPi / 2)) - Vector2d(1, 1)).norm(), 0.0, 1e-12);

  const auto pts = link_points(m, Vector2d(kPi / 2, -kPi / 2));
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_NEAR((pts[1] - Vector2d(0, 1)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((pts[2] - oracle_tip(m, Vector2d(kPi / 2, -kPi / 2))).norm(), 0.0, 1e-12);
}

TEST(Jacobian, Planar2RStraight) {
  MatrixXd expected(2, 2);
  expected << 0, 0, 2, 1;
  EXPECT_NEAR((jacobian(planar_2link(), Vector2d(0, 0)) - expected).norm(), 0.0, 1e-12);
}

TEST(Jacobian, MatchesFiniteDifferences) {
  std::mt19937_64 rng(1);
  for (const auto& m : {planar_2link(), planar_3link()}) {
    for (int k = 0; k < 200; ++k) {
      const VectorXd q = random_q(m, rng);
      EXPECT_LE((jacobian(m, q) - oracle_jacobian(m, q)).cwiseAbs().maxCoeff(), 1e-5);
    }
  }
}

TEST(Jacobian, FoldedIsRankOne) {
  Eigen::FullPivLU<MatrixXd> lu(jacobian(planar_2link(), Vector2d(0.3, kPi)));
  lu.setThreshold(1e-9);
  EXPECT_EQ(lu.rank(), 1);
}

TEST(Jacobian, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(2);
  const auto m = planar_3link();
  for (int k = 0; k < 50; ++k) {
    const VectorXd q = random_q(m, rng);
    const VectorXd qd = random_vec(3, 2.0, rng);
    const double h = 1e-5;
    const MatrixXd oracle = (oracle_jacobian(m, q + h * qd) - oracle_jacobian(m, q - h * qd)) / (2 * h);
    EXPECT_LE((jacobian_derivative(m, q, qd) - oracle).cwiseAbs().maxCoeff(), 1e-4);
  }
}

TEST(DynamicsTerms, Planar2RClosedForm) {
  const auto m = planar_2link(1.0, 1.0);
  const auto d = dynamics_terms(m, Vector2d(0.7, 0.0), Vector2d(0, 0));
  MatrixXd expected(2, 2);
  expected << 5, 2, 2, 1;
  EXPECT_NEAR((d.M - expected).norm(), 0.0, 1e-12);

  const auto z = dynamics_terms(m, Vector2d(0, 0), Vector2d(0, 0));
  EXPECT_EQ(z.c.norm(), 0.0);
  EXPECT_NEAR(z.g[0], 29.43, 1e-12);
  EXPECT_NEAR(z.g[1], 9.81, 1e-12);
  EXPECT_NEAR((z.g - oracle_gravity(m, Vector2d(0, 0))).norm(), 0.0, 1e-6);
}

TEST(DynamicsTerms, MatchLagrangianOracle) {
  std::mt19937_64 rng(3);
  for (const auto& m : {planar_2link(0.8, 1.3), planar_3link()}) {
    for (int k = 0; k < 20; ++k) {
      const VectorXd q = random_q(m, rng);
      const VectorXd qd = random_vec(m.dof(), 2.0, rng);
      const auto d = dynamics_terms(m, q, qd);
      EXPECT_LE((d.M - oracle_mass(m, q)).cwiseAbs().maxCoeff(), 1e-6);
      EXPECT_LE((d.g - oracle_gravity(m, q)).cwiseAbs().maxCoeff(), 1e-5);
      const VectorXd c = oracle_bias(m, q, qd);
      EXPECT_LE((d.c - c).norm(), 1e-4 * std::max(1.0, c.norm()));
    }
  }
}

TEST(DynamicsTerms, MassMatrixSymmetricPositiveDefinite) {
  std::mt19937_64 rng(4);
  const auto m = planar_3link();
  for (int k = 0; k < 1000; ++k) {
    const MatrixXd M = mass_matrix(m, random_q(m, rng));
    ASSERT_LE((M - M.transpose()).norm(), 1e-12);
    ASSERT_GT(Eigen::SelfAdjointEigenSolver<MatrixXd>(M).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(DynamicsTerms, MdotMinus2CIsSkew) {
  std::mt19937_64 rng(5);
  const auto m = planar_3link();
  const double h = 1e-6;
  for (int k = 0; k < 1000; ++k) {
    const VectorXd q = random_q(m, rng);
    const VectorXd qd = random_vec(3, 2.0, rng);
    const MatrixXd Mdot = (mass_matrix(m, q + h * qd) - mass_matrix(m, q - h * qd)) / (2 * h);
    const MatrixXd N = Mdot - 2.0 * coriolis_matrix(m, q, qd);
    ASSERT_LE((N + N.transpose()).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(TaskSpaceInertia, SquareJacobianIdentity) {
  std::mt19937_64 rng(6);
  const auto m = planar_2link();
  for (int k = 0; k < 100; ++k) {
    VectorXd q = random_q(m, rng);
    if (std::abs(std::sin(q[1])) < 0.2) continue;
    const MatrixXd J = jacobian(m, q);
    const MatrixXd M = mass_matrix(m, q);
    const MatrixXd Jinv = J.inverse();
    const MatrixXd L = task_space_inertia(m, q);
    EXPECT_LE((L - Jinv.transpose() * M * Jinv).norm(), 1e-9 * L.norm());
    EXPECT_LE((L - L.transpose()).norm(), 1e-10);

    const VectorXd qd = random_vec(2, 2.0, rng);
    const VectorXd xd = J * qd;
    EXPECT_NEAR(0.5 * qd.dot(M * qd), 0.5 * xd.dot(L * xd), 1e-9);
  }
}

TEST(TaskSpaceInertia, DampedNearSingularity) {
  bool damped = false;
  const MatrixXd L = task_space_inertia(planar_2link(), Vector2d(0.3, 1e-7), &damped);
  EXPECT_TRUE(damped);
  EXPECT_TRUE(L.allFinite());
}

TEST(InverseDynamicsCompensation, ZeroAtRest) {
  const auto m = planar_3link();
  EXPECT_EQ(inverse_dynamics_compensation(m, VectorXd::Constant(3, 0.5), VectorXd::Zero(3)).norm(), 0.0);
}

TEST(InverseDynamicsCompensation, MatchesOracle) {
  std::mt19937_64 rng(7);
  const auto m = planar_3link();
  for (int k = 0; k < 20; ++k) {
    const VectorXd q = random_q(m, rng);
    const VectorXd qd = random_vec(3, 2.0, rng);
    const MatrixXd J = oracle_jacobian(m, q);
    const MatrixXd M = oracle_mass(m, q);
    const MatrixXd Minv = M.inverse();
    const MatrixXd L = (J * Minv * J.transpose()).inverse();
    const double h = 1e-5;
    const MatrixXd Jdot = (oracle_jacobian(m, q + h * qd) - oracle_jacobian(m, q - h * qd)) / (2 * h);
    const VectorXd oracle = L * (J * Minv * oracle_bias(m, q, qd) - Jdot * qd);
    const VectorXd h_lib = inverse_dynamics_compensation(m, q, qd);
    EXPECT_LE((h_lib - oracle).norm(), 1e-4 * std::max(1.0, oracle.norm()));
  }
}

TEST(InverseDynamicsCompensation, QuadraticInVelocity) {
  std::mt19937_64 rng(8);
  const auto m = planar_2link();
  for (int k = 0; k < 50; ++k) {
    VectorXd q = random_q(m, rng);
    if (std::abs(std::sin(q[1])) < 0.2) continue;
    const VectorXd qd = random_vec(2, 1.0, rng);
    const VectorXd h1 = inverse_dynamics_compensation(m, q, qd);
    const VectorXd h2 = inverse_dynamics_compensation(m, q, 2.0 * qd);
    EXPECT_LE((h2 - 4.0 * h1).norm(), 1e-6 * std::max(1e-3, h2.norm()));
  }
}

TEST(NullSpace, NoEndEffectorAcceleration) {
  std::mt19937_64 rng(9);
  const auto m = planar_3link();
  int checked = 0;
  for (int k = 0; k < 1000; ++k) {
    JointState js{random_q(m, rng), random_vec(3, 1.0, rng)};
    const auto t = task_space_terms(m, js);
    const VectorXd tau = random_vec(3, 10.0, rng);
    ASSERT_FALSE(t.damped);
    ASSERT_LE((t.J * t.M_inv * t.null_projector * tau).norm(), 1e-8);
    ++checked;
  }
  EXPECT_EQ(checked, 1000);
}

TEST(IntegrateStep, GravityCompensationHolds) {
  const auto m = planar_3link();
  JointState js{Eigen::Vector3d(1.15, -1.3, -1.1), VectorXd::Zero(3)};
  const JointState next = integrate_step(m, js, gravity_torque(m, js.q), Vector2d::Zero(), 1e-4);
  EXPECT_LE((next.q - js.q).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(next.qd.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(IntegrateStep, PendulumEnergyDrift) {
  ManipulatorModel m;
  m.links = {point_mass_link(1.0, 1.0)};
  JointState js{VectorXd::Constant(1, -0.3), VectorXd::Zero(1)};
  const VectorXd zero = VectorXd::Zero(1);
  const double e0 = kinetic_energy(m, js) + potential_energy(m, js.q);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    js = integrate_step(m, js, zero, Vector2d::Zero(), 1e-4);
    const double e = kinetic_energy(m, js) + potential_energy(m, js.q);
    worst = std::max(worst, std::abs(e - e0));
  }
  // Energy relative to the lowest point of the swing.
  const double scale = e0 - potential_energy(m, VectorXd::Constant(1, -kPi / 2));
  EXPECT_LE(worst / scale, 1e-3);
}

TEST(IntegrateStep, ConvergesAtLeastFirstOrder) {
  const auto m = planar_2link();
  const JointState start{Vector2d(0.4, 0.9), Vector2d(0.5, -0.3)};
  const VectorXd tau = Vector2d(1.0, -0.5);
  auto simulate = [&](double dt) {
    JointState js = start;
    const int n = static_cast<int>(std::lround(0.2 / dt));
    for (int i = 0; i < n; ++i) js = integrate_step(m, js, tau, Vector2d::Zero(), dt);
    return js.q;
  };
  const VectorXd ref = simulate(1e-6);
  const double e1 = (simulate(2e-3) - ref).norm();
  const double e2 = (simulate(1e-3) - ref).norm();
  const double e3 = (simulate(5e-4) - ref).norm();
  EXPECT_GE(std::log2(e1 / e2), 0.9);
  EXPECT_GE(std::log2(e2 / e3), 0.9);
}

TEST(Model, ValidateRejectsBadInput) {
  auto m = planar_3link();
  m.links[1].mass = 0.0;
  EXPECT_THROW(m.validate(), ModelError);
  m = planar_3link();
  m.limits.pop_back();
  EXPECT_THROW(m.validate(), ModelError);
  m = planar_3link();
  EXPECT_THROW(forward_kinematics(m, Vector2d(0, 0)), ModelError);
}
