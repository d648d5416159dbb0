#pragma once

// Planar serial-chain kinematics and rigid-body dynamics.
//
// Joints are revolute about the plane normal; joint i rotates link i relative
// to link i-1. The task space is the end-effector position (x, y), optionally
// followed by the end-effector angle when the model enables an orientation
// axis. Equations of motion: M(q) qdd + c(q, qd) + g(q) = tau + J^T w.

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fic_teleop {

struct ModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Link {
  double length = 1.0;   // m
  double mass = 1.0;     // kg
  double com = 1.0;      // distance of the centre of mass from the joint, m
  double inertia = 1.0;  // about the joint axis, kg*m^2 (>= mass * com^2)
};

struct JointLimit {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

struct ManipulatorModel {
  std::vector<Link> links;
  std::vector<JointLimit> limits;  // empty or one per joint
  Eigen::Vector2d gravity{0.0, -9.81};
  bool orientation_axis = false;
  double torque_limit = std::numeric_limits<double>::infinity();

  int dof() const { return static_cast<int>(links.size()); }
  int task_dim() const { return orientation_axis ? 3 : 2; }

  /// Throws ModelError when the model violates its invariants.
  void validate() const;
};

/// Link with its mass concentrated at the tip.
Link point_mass_link(double length, double mass);
/// Uniform slender rod.
Link rod_link(double length, double mass);

/// Two equal point-mass links; the analytic reference model.
ManipulatorModel planar_2link(double length = 1.0, double mass = 1.0);
/// Three-link redundant arm used for the teleoperation scenarios.
ManipulatorModel planar_3link();

struct JointState {
  Eigen::VectorXd q;
  Eigen::VectorXd qd;
};

struct TaskState {
  Eigen::VectorXd pose;
  Eigen::VectorXd vel;
};

struct DynamicsTerms {
  Eigen::MatrixXd M;
  Eigen::VectorXd c;  // C(q, qd) qd
  Eigen::VectorXd g;
};

/// Everything the replica torque law needs at one state, computed once.
struct TaskSpaceTerms {
  Eigen::MatrixXd J;
  Eigen::MatrixXd M;
  Eigen::MatrixXd M_inv;
  Eigen::VectorXd c;
  Eigen::VectorXd g;
  Eigen::MatrixXd Lambda;
  Eigen::VectorXd h;                // task-space bias compensation
  Eigen::MatrixXd null_projector;   // N^T = I - J^T Jbar^T, applied to torques
  bool damped = false;              // Lambda needed the damped inverse
};

Eigen::VectorXd forward_kinematics(const ManipulatorModel& model, const Eigen::VectorXd& q);

/// Base, every joint, and the end-effector, as 2D points.
std::vector<Eigen::Vector2d> link_points(const ManipulatorModel& model, const Eigen::VectorXd& q);

Eigen::MatrixXd jacobian(const ManipulatorModel& model, const Eigen::VectorXd& q);

/// Jdot by central difference of the Jacobian along qd.
Eigen::MatrixXd jacobian_derivative(const ManipulatorModel& model, const Eigen::VectorXd& q,
                                    const Eigen::VectorXd& qd, double h = 1e-6);

TaskState task_state(const ManipulatorModel& model, const JointState& js);

Eigen::MatrixXd mass_matrix(const ManipulatorModel& model, const Eigen::VectorXd& q);

/// Coriolis/centrifugal matrix from the Christoffel symbols of M.
Eigen::MatrixXd coriolis_matrix(const ManipulatorModel& model, const Eigen::VectorXd& q,
                                const Eigen::VectorXd& qd);

Eigen::VectorXd gravity_torque(const ManipulatorModel& model, const Eigen::VectorXd& q);

DynamicsTerms dynamics_terms(const ManipulatorModel& model, const Eigen::VectorXd& q,
                             const Eigen::VectorXd& qd);

inline constexpr double kSingularValueThreshold = 1e-4;
inline constexpr double kPseudoInverseDamping = 1e-6;

/// (J M^-1 J^T)^-1, switching to a damped inverse when the smallest singular
/// value of J drops below kSingularValueThreshold.
Eigen::MatrixXd task_space_inertia(const ManipulatorModel& model, const Eigen::VectorXd& q,
                                   bool* damped = nullptr);

Eigen::VectorXd inverse_dynamics_compensation(const ManipulatorModel& model,
                                              const Eigen::VectorXd& q,
                                              const Eigen::VectorXd& qd);

TaskSpaceTerms task_space_terms(const ManipulatorModel& model, const JointState& js);

/// Semi-implicit Euler step. ext_wrench is applied at the end-effector through
/// J^T and may have 2 (force) or task_dim() components.
JointState integrate_step(const ManipulatorModel& model, const JointState& state,
                          const Eigen::VectorXd& tau, const Eigen::VectorXd& ext_wrench,
                          double dt);

/// Same step reusing terms already computed at `state`.
JointState integrate_step(const ManipulatorModel& model, const JointState& state,
                          const Eigen::VectorXd& tau, const Eigen::VectorXd& ext_wrench, double dt,
                          const TaskSpaceTerms& terms);

double kinetic_energy(const ManipulatorModel& model, const JointState& js);
double potential_energy(const ManipulatorModel& model, const Eigen::VectorXd& q);

}  // namespace fic_teleop
