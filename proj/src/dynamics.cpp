#include "fic_teleop/dynamics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>

namespace fic_teleop {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

Vector2d dir(double theta) { return {std::cos(theta), std::sin(theta)}; }
Vector2d dir_prime(double theta) { return {-std::sin(theta), std::cos(theta)}; }

std::vector<double> absolute_angles(const VectorXd& q) {
  std::vector<double> theta(static_cast<std::size_t>(q.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    acc += q[i];
    theta[static_cast<std::size_t>(i)] = acc;
  }
  return theta;
}

void check_size(const ManipulatorModel& model, const VectorXd& v, const char* what) {
  if (v.size() != model.dof()) {
    throw ModelError(std::string(what) + " has " + std::to_string(v.size()) +
                     " entries, model has " + std::to_string(model.dof()) + " joints");
  }
}

// Linear-velocity Jacobian of the centre of mass of link k.
MatrixXd com_jacobian(const ManipulatorModel& model, const std::vector<double>& theta, int k) {
  const int n = model.dof();
  MatrixXd J = MatrixXd::Zero(2, n);
  const auto& links = model.links;
  for (int i = 0; i <= k; ++i) {
    Vector2d col = links[k].com * dir_prime(theta[k]);
    for (int j = i; j < k; ++j) col += links[j].length * dir_prime(theta[j]);
    J.col(i) = col;
  }
  return J;
}

// d(com_jacobian(k)) / d q_l.
MatrixXd com_jacobian_partial(const ManipulatorModel& model, const std::vector<double>& theta,
                              int k, int l) {
  const int n = model.dof();
  MatrixXd dJ = MatrixXd::Zero(2, n);
  if (l > k) return dJ;
  const auto& links = model.links;
  for (int i = 0; i <= k; ++i) {
    Vector2d col = -links[k].com * dir(theta[k]);
    for (int j = std::max(i, l); j < k; ++j) col -= links[j].length * dir(theta[j]);
    dJ.col(i) = col;
  }
  return dJ;
}

double com_inertia(const Link& link) { return link.inertia - link.mass * link.com * link.com; }

// dM/dq_l for every l.
std::vector<MatrixXd> mass_matrix_partials(const ManipulatorModel& model, const VectorXd& q) {
  const int n = model.dof();
  const auto theta = absolute_angles(q);
  std::vector<MatrixXd> dM(static_cast<std::size_t>(n), MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k) {
    const MatrixXd Jk = com_jacobian(model, theta, k);
    const double m = model.links[k].mass;
    for (int l = 0; l <= k; ++l) {
      const MatrixXd dJ = com_jacobian_partial(model, theta, k, l);
      const MatrixXd t = dJ.transpose() * Jk;
      dM[static_cast<std::size_t>(l)] += m * (t + t.transpose());
    }
  }
  return dM;
}

std::atomic<int> damped_warnings{0};

}  // namespace

void ManipulatorModel::validate() const {
  if (dof() < 2) throw ModelError("manipulator needs at least 2 joints");
  if (orientation_axis && dof() < 3) {
    throw ModelError("an orientation task axis needs at least 3 joints");
  }
  for (std::size_t i = 0; i < links.size(); ++i) {
    const Link& link = links[i];
    const std::string id = "link " + std::to_string(i);
    if (!(link.length > 0.0)) throw ModelError(id + ": length must be positive");
    if (!(link.mass > 0.0)) throw ModelError(id + ": mass must be positive");
    if (!(link.com >= 0.0)) throw ModelError(id + ": com offset must be non-negative");
    if (com_inertia(link) < -1e-12) {
      throw ModelError(id + ": inertia about the joint is below mass * com^2");
    }
  }
  if (!limits.empty()) {
    if (static_cast<int>(limits.size()) != dof()) {
      throw ModelError("joint limit count does not match joint count");
    }
    for (const auto& lim : limits) {
      if (!(lim.lower < lim.upper)) throw ModelError("joint limit lower bound must be < upper");
    }
  }
  if (!gravity.allFinite()) throw ModelError("gravity must be finite");
  if (!(torque_limit > 0.0)) throw ModelError("torque limit must be positive");
}

Link point_mass_link(double length, double mass) {
  return Link{length, mass, length, mass * length * length};
}

Link rod_link(double length, double mass) {
  return Link{length, mass, 0.5 * length, mass * length * length / 3.0};
}

ManipulatorModel planar_2link(double length, double mass) {
  ManipulatorModel model;
  model.links = {point_mass_link(length, mass), point_mass_link(length, mass)};
  return model;
}

ManipulatorModel planar_3link() {
  ManipulatorModel model;
  model.links = {rod_link(0.40, 2.0), rod_link(0.35, 1.5), rod_link(0.25, 1.0)};
  model.limits = {{-0.2, 2.5}, {-2.8, 0.2}, {-2.6, 0.4}};
  return model;
}

VectorXd forward_kinematics(const ManipulatorModel& model, const VectorXd& q) {
  check_size(model, q, "q");
  const auto theta = absolute_angles(q);
  Vector2d p = Vector2d::Zero();
  for (int j = 0; j < model.dof(); ++j) p += model.links[j].length * dir(theta[j]);
  VectorXd pose(model.task_dim());
  pose.head<2>() = p;
  if (model.orientation_axis) pose[2] = theta.back();
  return pose;
}

std::vector<Vector2d> link_points(const ManipulatorModel& model, const VectorXd& q) {
  check_size(model, q, "q");
  const auto theta = absolute_angles(q);
  std::vector<Vector2d> pts{Vector2d::Zero()};
  for (int j = 0; j < model.dof(); ++j) {
    pts.push_back(pts.back() + model.links[j].length * dir(theta[j]));
  }
  return pts;
}

MatrixXd jacobian(const ManipulatorModel& model, const VectorXd& q) {
  check_size(model, q, "q");
  const int n = model.dof();
  const auto theta = absolute_angles(q);
  MatrixXd J = MatrixXd::Zero(model.task_dim(), n);
  Vector2d tail = Vector2d::Zero();
  for (int i = n - 1; i >= 0; --i) {
    tail += model.links[i].length * dir_prime(theta[i]);
    J.block<2, 1>(0, i) = tail;
  }
  if (model.orientation_axis) J.row(2).setOnes();
  return J;
}

MatrixXd jacobian_derivative(const ManipulatorModel& model, const VectorXd& q,
                             const VectorXd& qd, double h) {
  check_size(model, qd, "qd");
  return (jacobian(model, q + h * qd) - jacobian(model, q - h * qd)) / (2.0 * h);
}

TaskState task_state(const ManipulatorModel& model, const JointState& js) {
  return TaskState{forward_kinematics(model, js.q), jacobian(model, js.q) * js.qd};
}

MatrixXd mass_matrix(const ManipulatorModel& model, const VectorXd& q) {
  check_size(model, q, "q");
  const int n = model.dof();
  const auto theta = absolute_angles(q);
  MatrixXd M = MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const MatrixXd Jk = com_jacobian(model, theta, k);
    M += model.links[k].mass * Jk.transpose() * Jk;
    // Angular velocity of link k is the sum of the first k+1 joint rates.
    M.topLeftCorner(k + 1, k + 1).array() += com_inertia(model.links[k]);
  }
  return M;
}

MatrixXd coriolis_matrix(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd) {
  check_size(model, qd, "qd");
  const int n = model.dof();
  const auto dM = mass_matrix_partials(model, q);
  MatrixXd C = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double cij = 0.0;
      for (int k = 0; k < n; ++k) {
        cij += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * qd[k];
      }
      C(i, j) = cij;
    }
  }
  return C;
}

VectorXd gravity_torque(const ManipulatorModel& model, const VectorXd& q) {
  check_size(model, q, "q");
  const auto theta = absolute_angles(q);
  VectorXd g = VectorXd::Zero(model.dof());
  for (int k = 0; k < model.dof(); ++k) {
    g -= model.links[k].mass * com_jacobian(model, theta, k).transpose() * model.gravity;
  }
  return g;
}

DynamicsTerms dynamics_terms(const ManipulatorModel& model, const VectorXd& q,
                             const VectorXd& qd) {
  DynamicsTerms terms;
  terms.M = mass_matrix(model, q);
  terms.c = coriolis_matrix(model, q, qd) * qd;
  terms.g = gravity_torque(model, q);
  return terms;
}

namespace {

MatrixXd invert_operational(const MatrixXd& J, const MatrixXd& M_inv, bool* damped) {
  const MatrixXd A = J * M_inv * J.transpose();
  // Singular values of J are the square roots of the eigenvalues of J J^T.
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(J * J.transpose(), Eigen::EigenvaluesOnly);
  const double smallest = std::sqrt(std::max(eig.eigenvalues().minCoeff(), 0.0));
  const bool near_singular = smallest < kSingularValueThreshold;
  if (damped) *damped = near_singular;
  if (!near_singular) return A.inverse();
  if (damped_warnings.fetch_add(1) < 5) {
    spdlog::warn("Jacobian near singular (sigma_min = {:.3g}); using damped task-space inverse",
                 smallest);
  }
  const MatrixXd I = MatrixXd::Identity(A.rows(), A.cols());
  return (A + kPseudoInverseDamping * I).inverse();
}

}  // namespace

MatrixXd task_space_inertia(const ManipulatorModel& model, const VectorXd& q, bool* damped) {
  const MatrixXd J = jacobian(model, q);
  const MatrixXd M_inv = mass_matrix(model, q).inverse();
  return invert_operational(J, M_inv, damped);
}

VectorXd inverse_dynamics_compensation(const ManipulatorModel& model, const VectorXd& q,
                                       const VectorXd& qd) {
  return task_space_terms(model, JointState{q, qd}).h;
}

TaskSpaceTerms task_space_terms(const ManipulatorModel& model, const JointState& js) {
  TaskSpaceTerms t;
  t.J = jacobian(model, js.q);
  t.M = mass_matrix(model, js.q);
  Eigen::LDLT<MatrixXd> ldlt(t.M);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all()) {
    throw ModelError("mass matrix is not positive definite");
  }
  t.M_inv = ldlt.solve(MatrixXd::Identity(model.dof(), model.dof()));
  t.c = coriolis_matrix(model, js.q, js.qd) * js.qd;
  t.g = gravity_torque(model, js.q);
  t.Lambda = invert_operational(t.J, t.M_inv, &t.damped);
  const MatrixXd Jdot = jacobian_derivative(model, js.q, js.qd);
  t.h = t.Lambda * (t.J * t.M_inv * t.c - Jdot * js.qd);
  const MatrixXd Jbar = t.M_inv * t.J.transpose() * t.Lambda;
  t.null_projector =
      MatrixXd::Identity(model.dof(), model.dof()) - t.J.transpose() * Jbar.transpose();
  return t;
}

namespace {

void check_step(const ManipulatorModel& model, const VectorXd& tau, const VectorXd& ext_wrench,
                double dt) {
  if (!(dt > 0.0) || dt > 1e-2) throw std::invalid_argument("integration step must be in (0, 0.01] s");
  check_size(model, tau, "tau");
  if (!tau.allFinite()) throw std::invalid_argument("non-finite joint torque");
  if (!ext_wrench.allFinite()) throw std::invalid_argument("non-finite external wrench");
}

JointState advance(const ManipulatorModel& model, const JointState& state, const VectorXd& tau,
                   const VectorXd& ext_wrench, double dt, const MatrixXd& J, const MatrixXd& M,
                   const VectorXd& c, const VectorXd& g) {
  VectorXd applied = tau;
  if (std::isfinite(model.torque_limit)) {
    applied = applied.cwiseMax(-model.torque_limit).cwiseMin(model.torque_limit);
  }
  if (ext_wrench.size() > 0) {
    if (ext_wrench.size() > J.rows()) throw std::invalid_argument("external wrench too long");
    applied += J.topRows(ext_wrench.size()).transpose() * ext_wrench;
  }
  const VectorXd qdd = M.ldlt().solve(applied - c - g);

  JointState next;
  next.qd = state.qd + qdd * dt;
  next.q = state.q + next.qd * dt;
  if (!model.limits.empty()) {
    for (int i = 0; i < model.dof(); ++i) {
      const auto& lim = model.limits[static_cast<std::size_t>(i)];
      if (next.q[i] < lim.lower) {
        next.q[i] = lim.lower;
        next.qd[i] = 0.0;
      } else if (next.q[i] > lim.upper) {
        next.q[i] = lim.upper;
        next.qd[i] = 0.0;
      }
    }
  }
  return next;
}

}  // namespace

JointState integrate_step(const ManipulatorModel& model, const JointState& state,
                          const VectorXd& tau, const VectorXd& ext_wrench, double dt) {
  check_step(model, tau, ext_wrench, dt);
  const DynamicsTerms terms = dynamics_terms(model, state.q, state.qd);
  return advance(model, state, tau, ext_wrench, dt, jacobian(model, state.q), terms.M, terms.c,
                 terms.g);
}

JointState integrate_step(const ManipulatorModel& model, const JointState& state,
                          const VectorXd& tau, const VectorXd& ext_wrench, double dt,
                          const TaskSpaceTerms& terms) {
  check_step(model, tau, ext_wrench, dt);
  return advance(model, state, tau, ext_wrench, dt, terms.J, terms.M, terms.c, terms.g);
}

double kinetic_energy(const ManipulatorModel& model, const JointState& js) {
  return 0.5 * js.qd.dot(mass_matrix(model, js.q) * js.qd);
}

double potential_energy(const ManipulatorModel& model, const VectorXd& q) {
  const auto theta = absolute_angles(q);
  double v = 0.0;
  for (int k = 0; k < model.dof(); ++k) {
    Vector2d p = model.links[k].com * dir(theta[k]);
    for (int j = 0; j < k; ++j) p += model.links[j].length * dir(theta[j]);
    v -= model.links[k].mass * model.gravity.dot(p);
  }
  return v;
}

}  // namespace fic_teleop
