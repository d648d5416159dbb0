#include "fic_teleop/environment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fic_teleop {

using Eigen::Vector2d;

void ContactObject::validate() const {
  if (!(stiffness > 0.0)) throw std::invalid_argument(id + ": stiffness must be positive");
  if (!(damping >= 0.0)) throw std::invalid_argument(id + ": damping must be non-negative");
  if (kind == SurfaceKind::kHalfPlane && !(normal.norm() > 0.0)) {
    throw std::invalid_argument(id + ": half-plane normal must be non-zero");
  }
  if (kind == SurfaceKind::kBox && !(box_min.array() < box_max.array()).all()) {
    throw std::invalid_argument(id + ": box_min must be below box_max");
  }
  if (is_button) {
    if (!(activation_force > 0.0) || !(activation_travel > 0.0)) {
      throw std::invalid_argument(id + ": buttons need positive activation force and travel");
    }
  } else if (activation_force != 0.0 || activation_travel != 0.0) {
    throw std::invalid_argument(id + ": activation fields are only valid on buttons");
  }
}

ContactResult contact_wrench(const ContactObject& obj, const Vector2d& ee_pose,
                             const Vector2d& ee_vel) {
  ContactResult r;
  Vector2d n;
  double depth = 0.0;
  if (obj.kind == SurfaceKind::kHalfPlane) {
    n = obj.normal.normalized();
    depth = -(ee_pose - obj.point).dot(n);
  } else {
    if (!((ee_pose.array() > obj.box_min.array()).all() &&
          (ee_pose.array() < obj.box_max.array()).all())) {
      return r;
    }
    // Push out through the nearest face.
    const double faces[4] = {ee_pose.x() - obj.box_min.x(), obj.box_max.x() - ee_pose.x(),
                             ee_pose.y() - obj.box_min.y(), obj.box_max.y() - ee_pose.y()};
    const Vector2d normals[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    const auto nearest = std::min_element(faces, faces + 4) - faces;
    depth = faces[nearest];
    n = normals[nearest];
  }
  if (!(depth > 0.0)) return r;
  const double approach = std::max(0.0, -ee_vel.dot(n));
  r.penetration = depth;
  r.normal = n;
  r.normal_force = std::max(0.0, obj.stiffness * depth + obj.damping * approach);
  r.wrench = r.normal_force * n;
  return r;
}

ButtonLatch update_button(const ContactObject& obj, ButtonLatch latch, double normal_force,
                          double t) {
  if (!obj.is_button) return latch;
  if (normal_force >= obj.activation_force) {
    if (latch.above_since < 0.0) latch.above_since = t;
    // Small slack absorbs accumulated rounding in t.
    if (t - latch.above_since >= kButtonHoldTime - 1e-9) latch.active = true;
  } else {
    latch.above_since = -1.0;
  }
  if (latch.active && normal_force < kButtonReleaseFraction * obj.activation_force) {
    latch.active = false;
  }
  return latch;
}

std::vector<ContactObject> object_catalog() {
  static const char* names[5] = {"sponge", "tissue_box", "plastic_lid", "rock", "metal_box"};
  std::vector<ContactObject> out;
  for (int i = 0; i < 5; ++i) {
    ContactObject obj;
    obj.id = names[i];
    obj.kind = SurfaceKind::kBox;
    obj.stiffness = std::pow(10.0, 2.0 + 0.75 * i);
    obj.damping = 0.05 * std::sqrt(obj.stiffness * 1.0);
    obj.box_min = Vector2d(0.40, -0.20);
    obj.box_max = Vector2d(0.60, 0.0);
    out.push_back(obj);
  }
  return out;
}

ContactObject make_button(const std::string& id, const Vector2d& top_center) {
  ContactObject b;
  b.id = id;
  b.kind = SurfaceKind::kBox;
  b.box_min = top_center + Vector2d(-0.02, -0.03);
  b.box_max = top_center + Vector2d(0.02, 0.0);
  b.is_button = true;
  b.activation_force = kButtonActivationForce;
  b.activation_travel = kButtonActivationTravel;
  // Reaching the activation force coincides with the activation travel.
  b.stiffness = kButtonActivationForce / kButtonActivationTravel;
  b.damping = 0.05 * std::sqrt(b.stiffness);
  return b;
}

std::vector<ContactObject> button_panel(const Vector2d& first_button_top) {
  ContactObject panel;
  panel.id = "panel";
  panel.kind = SurfaceKind::kHalfPlane;
  panel.point = first_button_top + Vector2d(0.0, -0.03);
  panel.normal = Vector2d(0.0, 1.0);
  panel.stiffness = 2e4;
  panel.damping = 0.05 * std::sqrt(panel.stiffness);
  return {panel, make_button("estop_1", first_button_top),
          make_button("estop_2", first_button_top + Vector2d(kButtonSeparation, 0.0))};
}

}  // namespace fic_teleop
