#include "fic_teleop/fic_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fic_teleop {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

template <typename F>
double simpson_step(const F& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double tol) {
  if (b <= a) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 48);
}

}  // namespace

std::string_view to_string(Phase phase) {
  return phase == Phase::kDivergence ? "divergence" : "convergence";
}

FicParams calibrate(double w_max, double x_b, double k_0, double d) {
  if (!(w_max > 0.0) || !(x_b > 0.0)) {
    throw std::invalid_argument("FIC calibration requires w_max > 0 and x_b > 0");
  }
  if (!(k_0 >= 0.0) || !(d >= 0.0)) {
    throw std::invalid_argument("FIC calibration requires k_0 >= 0 and d >= 0");
  }
  FicParams p;
  p.w_max = w_max;
  p.x_b = x_b;
  p.k_0 = k_0;
  p.d = d;
  p.k_max = w_max / x_b;
  if (!(p.k_max > 1.0)) {
    throw std::invalid_argument("FIC calibration requires w_max / x_b > 1 (got " +
                                std::to_string(p.k_max) + ")");
  }
  p.beta = std::sqrt(std::log(p.k_max) / (x_b * x_b));
  return p;
}

double divergence_stiffness(double err, const FicParams& p) {
  const double a = std::abs(err);
  if (a > p.x_b) {
    // K_0 + (W_max/|err| - K_0): the constant term cancels in the saturated band.
    return p.k_0 + (p.w_max / a - p.k_0);
  }
  const double bx = p.beta * a;
  return p.k_0 + std::exp(bx * bx);
}

double divergence_force(double err, const FicParams& p) {
  if (std::abs(err) > p.x_b) return p.w_max * sign(err);
  return divergence_stiffness(err, p) * err;
}

double stored_divergence_energy(double x_max_err, const FicParams& p) {
  if (!(x_max_err > 0.0)) return 0.0;
  const auto integrand = [&p](double x) { return divergence_stiffness(x, p) * x; };
  const double inner_end = std::min(x_max_err, p.x_b);
  double energy = adaptive_simpson(integrand, 0.0, inner_end, 0.5 * kEnergyQuadratureTol);
  if (x_max_err > p.x_b) {
    energy += adaptive_simpson(integrand, p.x_b, x_max_err, 0.5 * kEnergyQuadratureTol);
  }
  return energy;
}

double convergence_stiffness(double err, double x_max_err, double stored_energy) {
  const double a = std::abs(err);
  return 4.0 / (x_max_err * x_max_err) * stored_energy * ((0.5 * x_max_err - a) / a);
}

double convergence_force(double err, double x_max_err, double stored_energy) {
  if (!(x_max_err > 0.0)) return 0.0;
  const double gain = 4.0 * stored_energy / (x_max_err * x_max_err);
  return gain * (std::abs(err) - 0.5 * x_max_err) * sign(err);
}

double bounded_convergence_force(double err, double x_max_err, double stored_energy,
                                 const FicParams& p) {
  if (!(x_max_err > 0.0)) return 0.0;
  const double half = 0.5 * x_max_err;
  const double gain = 4.0 * stored_energy / (x_max_err * x_max_err);
  const double offset = std::min(std::abs(err), x_max_err) - half;
  const double mirror = half + std::abs(offset);
  const double cap = std::abs(divergence_force(mirror, p));
  const double magnitude = std::min(gain * std::abs(offset), cap);
  return sign(offset) * magnitude * sign(err);
}

AxisFicState update_phase(const AxisFicState& state, const AxisErrorState& e,
                          const FicParams& p, double vel_epsilon) {
  AxisFicState next = state;
  const double a = std::abs(e.err);
  const bool diverging =
      std::abs(e.err_rate) < vel_epsilon || sign(e.err) * sign(e.err_rate) >= 0.0;
  if (diverging) {
    if (state.phase == Phase::kConvergence) {
      next.x_max_err = a;
      next.stored_energy = stored_divergence_energy(a, p);
    }
    next.phase = Phase::kDivergence;
  } else {
    next.phase = Phase::kConvergence;
  }
  // An error beyond the recorded peak (start-up or a reference jump) becomes
  // the new peak in either phase.
  if (a > next.x_max_err) {
    next.x_max_err = a;
    next.stored_energy = stored_divergence_energy(a, p);
  }
  next.last_err = e.err;
  next.last_rate = e.err_rate;
  return next;
}

FicWrench fic_wrench(const AxisErrorState& e, const AxisFicState& state, const FicParams& p,
                     double vel_epsilon) {
  FicWrench out;
  out.state = update_phase(state, e, p, vel_epsilon);
  if (out.state.phase == Phase::kDivergence) {
    out.stiffness_force = divergence_force(e.err, p);
  } else {
    out.stiffness_force =
        bounded_convergence_force(e.err, out.state.x_max_err, out.state.stored_energy, p);
  }
  out.damping_force = -p.d * e.vel;
  out.force = out.stiffness_force + out.damping_force;
  return out;
}

double stiffness_force_bound(const FicParams& p) { return p.w_max + p.k_0 * p.x_b; }

}  // namespace fic_teleop
