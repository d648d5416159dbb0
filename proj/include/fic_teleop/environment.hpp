#pragma once

// Unilateral penalty contacts for the end-effector point, the five-object
// stiffness catalog, and E-stop button fixtures.
//
// All stiffness/damping values are synthetic analogs; no measured object
// properties are available.

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace fic_teleop {

enum class SurfaceKind { kHalfPlane, kBox };

struct ContactObject {
  std::string id;
  SurfaceKind kind = SurfaceKind::kHalfPlane;
  // Half-plane: the solid side is {p : (p - point) . normal <= 0}.
  Eigen::Vector2d point = Eigen::Vector2d::Zero();
  Eigen::Vector2d normal{0.0, 1.0};
  // Box: axis-aligned solid [box_min, box_max].
  Eigen::Vector2d box_min = Eigen::Vector2d::Zero();
  Eigen::Vector2d box_max = Eigen::Vector2d::Zero();
  double stiffness = 1e3;  // N/m
  double damping = 0.0;    // N*s/m
  bool is_button = false;
  double activation_force = 0.0;   // N
  double activation_travel = 0.0;  // m

  void validate() const;
};

struct ContactResult {
  Eigen::Vector2d wrench = Eigen::Vector2d::Zero();  // force on the end-effector
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();
  double penetration = 0.0;
  double normal_force = 0.0;
  bool activated = false;
};

ContactResult contact_wrench(const ContactObject& obj, const Eigen::Vector2d& ee_pose,
                             const Eigen::Vector2d& ee_vel);

inline constexpr double kButtonHoldTime = 0.05;        // s above activation force
inline constexpr double kButtonReleaseFraction = 0.5;  // of activation force

struct ButtonLatch {
  bool active = false;
  double above_since = -1.0;  // < 0 when the force is below threshold
};

/// Activation needs the normal force to stay at or above activation_force for
/// kButtonHoldTime; release needs it below kButtonReleaseFraction of it.
ButtonLatch update_button(const ContactObject& obj, ButtonLatch latch, double normal_force,
                          double t);

/// Five objects from compliant to stiff, stiffness log-spaced 1e2..1e5 N/m.
std::vector<ContactObject> object_catalog();

inline constexpr double kButtonSeparation = 0.10;
inline constexpr double kButtonActivationForce = 5.0;
inline constexpr double kButtonActivationTravel = 0.005;

/// An E-stop button whose top surface is centred at `top_center`.
ContactObject make_button(const std::string& id, const Eigen::Vector2d& top_center);

/// Panel surface plus two buttons kButtonSeparation apart along x.
std::vector<ContactObject> button_panel(const Eigen::Vector2d& first_button_top);

}  // namespace fic_teleop
