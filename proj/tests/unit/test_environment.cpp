#include <gtest/gtest.h>

#include <cmath>

#include "fic_teleop/environment.hpp"

using namespace fic_teleop;
using Eigen::Vector2d;

namespace {

ContactObject floor_plane(double k, double d) {
  ContactObject o;
  o.id = "floor";
  o.kind = SurfaceKind::kHalfPlane;
  o.point = Vector2d::Zero();
  o.normal = Vector2d(0, 1);
  o.stiffness = k;
  o.damping = d;
  return o;
}

}  // namespace

TEST(Contact, OutsideIsZero) {
  const auto r = contact_wrench(floor_plane(1e4, 10), Vector2d(0.3, 0.01), Vector2d(0, -1));
  EXPECT_EQ(r.wrench.norm(), 0.0);
  EXPECT_EQ(r.normal_force, 0.0);
}

TEST(Contact, HookePenalty) {
  const auto r = contact_wrench(floor_plane(1e4, 0), Vector2d(0.3, -0.001), Vector2d::Zero());
  EXPECT_NEAR(r.normal_force, 10.0, 1e-12);
  EXPECT_NEAR((r.wrench - Vector2d(0, 10)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.penetration, 0.001, 1e-15);
}

TEST(Contact, NoStickingOnRetraction) {
  const auto obj = floor_plane(1e4, 50);
  const auto retract = contact_wrench(obj, Vector2d(0, -0.001), Vector2d(0, 0.5));
  EXPECT_NEAR(retract.normal_force, 10.0, 1e-12);
  const auto approach = contact_wrench(obj, Vector2d(0, -0.001), Vector2d(0, -0.5));
  EXPECT_NEAR(approach.normal_force, 10.0 + 25.0, 1e-12);
  // Fast retraction must not pull the end-effector back in.
  const auto fast = contact_wrench(floor_plane(1e2, 1e4), Vector2d(0, -1e-4), Vector2d(0, 5));
  EXPECT_GE(fast.normal_force, 0.0);
}

TEST(Contact, BoxPushesOutNearestFace) {
  ContactObject box;
  box.kind = SurfaceKind::kBox;
  box.box_min = Vector2d(0, 0);
  box.box_max = Vector2d(1, 0.5);
  box.stiffness = 100;
  const auto r = contact_wrench(box, Vector2d(0.5, 0.49), Vector2d::Zero());
  EXPECT_NEAR((r.normal - Vector2d(0, 1)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(r.normal_force, 1.0, 1e-9);
  const auto side = contact_wrench(box, Vector2d(0.02, 0.2), Vector2d::Zero());
  EXPECT_NEAR((side.normal - Vector2d(-1, 0)).norm(), 0.0, 1e-15);
}

TEST(Catalog, FiveObjectsLogSpaced) {
  const auto cat = object_catalog();
  ASSERT_EQ(cat.size(), 5u);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const double expected = std::pow(10.0, 2.0 + 3.0 * static_cast<double>(i) / 4.0);
    EXPECT_NEAR(cat[i].stiffness, expected, 1e-9 * expected);
    if (i > 0) EXPECT_GT(cat[i].stiffness, cat[i - 1].stiffness);
    EXPECT_NO_THROW(cat[i].validate());
  }
  EXPECT_NEAR(cat[1].stiffness, 5.6e2, 5);
  EXPECT_NEAR(cat[2].stiffness, 3.2e3, 50);
  EXPECT_NEAR(cat[3].stiffness, 1.8e4, 300);
}

TEST(Buttons, PanelSeparation) {
  const auto panel = button_panel(Vector2d(0.45, 0.0));
  std::vector<Vector2d> tops;
  for (const auto& o : panel) {
    EXPECT_NO_THROW(o.validate());
    if (o.is_button) tops.push_back(Vector2d(0.5 * (o.box_min.x() + o.box_max.x()), o.box_max.y()));
  }
  ASSERT_EQ(tops.size(), 2u);
  EXPECT_NEAR((tops[1] - tops[0]).norm(), 0.10, 1e-12);
}

TEST(Buttons, ActivationNeedsHoldAndReleaseHysteresis) {
  const ContactObject b = make_button("b", Vector2d::Zero());
  const double dt = 1e-3;
  ButtonLatch l;
  // Activation force is reached at the activation travel.
  EXPECT_NEAR(contact_wrench(b, Vector2d(0, -kButtonActivationTravel), Vector2d::Zero()).normal_force,
              kButtonActivationForce, 1e-9);
  int k = 0;
  for (; k < 49; ++k) l = update_button(b, l, 6.0, k * dt);
  EXPECT_FALSE(l.active);
  l = update_button(b, l, 6.0, 50 * dt);
  EXPECT_TRUE(l.active);
  l = update_button(b, l, 3.0, 51 * dt);
  EXPECT_TRUE(l.active);
  l = update_button(b, l, 2.0, 52 * dt);
  EXPECT_FALSE(l.active);
}

TEST(Objects, ValidateRejects) {
  ContactObject o = floor_plane(-1, 0);
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = floor_plane(1, 0);
  o.activation_force = 3;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}
