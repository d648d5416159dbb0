#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fic_teleop/fic_core.hpp"

using namespace fic_teleop;

namespace {

// Solves exp((beta * x_b)^2) = k_max by bisection, without the closed form.
double beta_by_bisection(double k_max, double x_b) {
  double lo = 0.0;
  double hi = 1.0;
  while (std::exp(std::pow(hi * x_b, 2)) < k_max) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::exp(std::pow(mid * x_b, 2)) < k_max ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Eq. (4) written out directly.
double eq4_force(double err, double w_max, double x_b, double k_0, double beta) {
  if (std::abs(err) > x_b) return err > 0 ? w_max : -w_max;
  return (k_0 + std::exp(beta * beta * err * err)) * err;
}

template <typename F>
double midpoint(const F& f, double a, double b, int panels) {
  const double h = (b - a) / panels;
  double s = 0.0;
  for (int i = 0; i < panels; ++i) s += f(a + (i + 0.5) * h);
  return s * h;
}

}  // namespace

TEST(Calibrate, MatchesBisection) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 1.0);
  EXPECT_DOUBLE_EQ(p.k_max, 200.0);
  EXPECT_NEAR(p.beta, beta_by_bisection(200.0, 0.1), 1e-9);
  EXPECT_NEAR(p.beta, 23.018, 1e-3);

  const FicParams q = calibrate(50.0, 0.05, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(q.k_max, 1000.0);
  EXPECT_NEAR(q.beta, beta_by_bisection(1000.0, 0.05), 1e-9);
  EXPECT_NEAR(q.beta, 52.566, 1e-3);
}

TEST(Calibrate, RejectsDegenerate) {
  EXPECT_THROW(calibrate(1.0, 1.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(calibrate(0.5, 1.0, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(calibrate(0.0, 0.1, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(calibrate(20.0, -0.1, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(calibrate(20.0, 0.1, -1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(calibrate(20.0, 0.1, 1.0, -1.0), std::invalid_argument);
}

TEST(DivergenceStiffness, Examples) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  EXPECT_DOUBLE_EQ(divergence_stiffness(0.0, p), 101.0);
  EXPECT_NEAR(divergence_stiffness(0.2, p), 100.0, 1e-12);
  EXPECT_DOUBLE_EQ(divergence_force(0.2, p), 20.0);
  EXPECT_DOUBLE_EQ(divergence_force(-0.2, p), -20.0);

  const double expected = 100.0 + std::exp(std::pow(p.beta * 0.05, 2));
  EXPECT_NEAR(divergence_stiffness(0.05, p), expected, 1e-12);
  EXPECT_NEAR(divergence_stiffness(0.05, p), 103.761, 1e-3);
  EXPECT_NEAR(divergence_force(0.05, p), eq4_force(0.05, 20.0, 0.1, 100.0, p.beta), 1e-12);
}

TEST(StoredEnergy, Examples) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  EXPECT_EQ(stored_divergence_energy(0.0, p), 0.0);

  const double oracle =
      midpoint([&](double x) { return eq4_force(x, 20.0, 0.1, 100.0, p.beta); }, 0.0, 0.05, 1000000);
  EXPECT_NEAR(stored_divergence_energy(0.05, p), oracle, 1e-6);

  // Across the saturation boundary.
  const double oracle_sat =
      midpoint([&](double x) { return eq4_force(x, 20.0, 0.1, 100.0, p.beta); }, 0.0, 0.15, 1000000);
  EXPECT_NEAR(stored_divergence_energy(0.15, p), oracle_sat, 1e-6);
}

TEST(ConvergenceStiffness, ConstantSpringStandIn) {
  // Constant K = 100 N/m up to 0.1 m stores 0.5 J.
  const double e = 0.5 * 100.0 * 0.1 * 0.1;
  EXPECT_DOUBLE_EQ(e, 0.5);
  EXPECT_NEAR(convergence_stiffness(0.05, 0.1, e), 0.0, 1e-12);
  EXPECT_NEAR(convergence_stiffness(0.025, 0.1, e), 200.0, 1e-9);
  EXPECT_NEAR(convergence_stiffness(-0.025, 0.1, e), 200.0, 1e-9);
}

TEST(ConvergenceForce, ZeroNetWork) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  for (double xm : {0.01, 0.05, 0.1, 0.3}) {
    const double e = stored_divergence_energy(xm, p);
    const double w = midpoint([&](double x) { return convergence_force(x, xm, e); }, 0.0, xm, 200000);
    EXPECT_NEAR(w, 0.0, 1e-8) << "x_max " << xm;
    const double wb =
        midpoint([&](double x) { return bounded_convergence_force(x, xm, e, p); }, 0.0, xm, 200000);
    EXPECT_NEAR(wb, 0.0, 1e-8) << "x_max " << xm;
  }
}

TEST(ConvergenceForce, BoundedAndFiniteAtZero) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  const double xm = 0.3;
  const double e = stored_divergence_energy(xm, p);
  EXPECT_TRUE(std::isfinite(bounded_convergence_force(0.0, xm, e, p)));
  for (int i = 0; i <= 1000; ++i) {
    const double x = xm * i / 1000.0;
    EXPECT_LE(std::abs(bounded_convergence_force(x, xm, e, p)), stiffness_force_bound(p) + 1e-12);
  }
}

TEST(UpdatePhase, SignConditions) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  AxisFicState s;
  EXPECT_EQ(update_phase(s, {0.1, 0.2, 0.0}, p).phase, Phase::kDivergence);
  EXPECT_EQ(update_phase(s, {0.1, 0.0, 0.0}, p).phase, Phase::kDivergence);
  EXPECT_EQ(update_phase(s, {0.1, -0.2, 0.0}, p).phase, Phase::kConvergence);
  EXPECT_EQ(update_phase(s, {-0.1, 0.2, 0.0}, p).phase, Phase::kConvergence);
}

TEST(UpdatePhase, ResetsPeakOnNewDivergence) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  AxisFicState s = update_phase({}, {0.08, 0.1, 0.0}, p);
  EXPECT_DOUBLE_EQ(s.x_max_err, 0.08);
  s = update_phase(s, {0.06, -0.1, 0.0}, p);
  EXPECT_EQ(s.phase, Phase::kConvergence);
  EXPECT_DOUBLE_EQ(s.x_max_err, 0.08);
  s = update_phase(s, {0.03, 0.1, 0.0}, p);
  EXPECT_EQ(s.phase, Phase::kDivergence);
  EXPECT_DOUBLE_EQ(s.x_max_err, 0.03);
  EXPECT_NEAR(s.stored_energy, stored_divergence_energy(0.03, p), 1e-15);
}

TEST(FicWrench, Examples) {
  const FicParams p = calibrate(20.0, 0.1, 100.0, 2.0);
  const FicWrench zero = fic_wrench({0.0, 0.0, 0.0}, {}, p);
  EXPECT_EQ(zero.force, 0.0);
  const FicWrench sat = fic_wrench({0.2, 0.0, 0.0}, {}, p);
  EXPECT_DOUBLE_EQ(sat.stiffness_force, 20.0);
  const FicWrench damped = fic_wrench({0.0, 0.0, 0.5}, {}, p);
  EXPECT_DOUBLE_EQ(damped.damping_force, -1.0);
}

TEST(FicWrench, RandomSamplesRespectBound) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> err(-0.5, 0.5);
  std::uniform_real_distribution<double> vel(-2.0, 2.0);
  const FicParams p = calibrate(20.0, 0.1, 100.0, 2.0);
  AxisFicState s;
  for (int i = 0; i < 100000; ++i) {
    const double e = err(rng);
    const FicWrench w = fic_wrench({e, vel(rng), 0.0}, s, p);
    ASSERT_LE(std::abs(w.stiffness_force), stiffness_force_bound(p) * (1 + 1e-12));
    if (w.state.phase == Phase::kDivergence && std::abs(e) > p.x_b) {
      ASSERT_NEAR(std::abs(w.stiffness_force), p.w_max, 1e-9 * p.w_max);
    }
    s = w.state;
  }
}

TEST(FicWrench, PointMassReturnsToRest) {
  // m = 1 kg, d = 0, released at rest with err = 0.05 m.
  const FicParams p = calibrate(20.0, 0.1, 100.0, 0.0);
  const double dt = 1e-4;
  double x = -0.05;
  double v = 0.0;
  AxisFicState s;
  double crossing_speed = -1.0;
  for (int i = 0; i < 200000; ++i) {
    const double err = -x;
    const FicWrench w = fic_wrench({err, -v, v}, s, p);
    s = w.state;
    v += w.force * dt;
    const double x_next = x + v * dt;
    if (x < 0.0 && x_next >= 0.0) {
      crossing_speed = std::abs(v);
      break;
    }
    x = x_next;
  }
  ASSERT_GE(crossing_speed, 0.0) << "never reached zero error";
  EXPECT_LE(crossing_speed, 1e-3);
}
