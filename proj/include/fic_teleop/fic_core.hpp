#pragma once

// Per-axis Fractal Impedance Controller.
//
// Each task-space axis runs an independent scalar controller with an
// anisotropic stiffness: a saturating spring while the error grows
// (divergence) and an energy-redistributing spring while it shrinks
// (convergence). The controller is a set of pure functions; the caller owns
// AxisFicState and threads it through successive calls.
//
// Sign convention: err = reference - position, so a positive stiffness
// produces a force pushing the plant back towards its reference. err_rate is
// d(err)/dt and decides the phase; vel is the plant velocity along the axis
// and feeds the damping term.

#include <string_view>

namespace fic_teleop {

enum class Phase { kDivergence = 0, kConvergence = 1 };

std::string_view to_string(Phase phase);

struct FicParams {
  double w_max = 0.0;  // N or N*m
  double x_b = 0.0;    // m or rad
  double k_0 = 0.0;    // N/m or N*m/rad
  double d = 0.0;      // N*s/m or N*m*s/rad
  double k_max = 0.0;  // w_max / x_b
  double beta = 0.0;   // sqrt(ln(k_max) / x_b^2)
};

struct AxisErrorState {
  double err = 0.0;
  double err_rate = 0.0;
  double vel = 0.0;
};

struct AxisFicState {
  Phase phase = Phase::kDivergence;
  double x_max_err = 0.0;
  double stored_energy = 0.0;
  double last_err = 0.0;
  double last_rate = 0.0;

  bool operator==(const AxisFicState&) const = default;
};

struct FicWrench {
  double stiffness_force = 0.0;
  double damping_force = 0.0;
  double force = 0.0;
  AxisFicState state;
};

inline constexpr double kDefaultVelEpsilon = 1e-4;
inline constexpr double kEnergyQuadratureTol = 1e-9;

/// Derives k_max and beta from the saturation force and the error at which it
/// is reached. Throws std::invalid_argument for non-positive inputs, negative
/// k_0/d, or k_max <= 1 (beta would be zero or imaginary).
FicParams calibrate(double w_max, double x_b, double k_0, double d);

/// Total divergence stiffness K_0 + K_v(err).
double divergence_stiffness(double err, const FicParams& p);

/// Signed divergence spring force K(err) * err.
double divergence_force(double err, const FicParams& p);

/// Energy absorbed by the divergence spring from 0 to x_max_err, by adaptive
/// Simpson quadrature split at the saturation boundary.
double stored_divergence_energy(double x_max_err, const FicParams& p);

/// Convergence stiffness as a function of the error, the divergence peak and
/// the energy stored at that peak. Undefined at err == 0; use
/// convergence_force there.
double convergence_stiffness(double err, double x_max_err, double stored_energy);

/// Energy-redistribution force along err: accelerates the plant towards zero
/// error on the outer half of the leg and brakes it on the inner half, with
/// zero net work from x_max_err to 0. Bounded everywhere, including err == 0.
double convergence_force(double err, double x_max_err, double stored_energy);

/// convergence_force limited so that, on the outer half, it never exceeds the
/// divergence force at the same error, mirrored onto the inner half so the
/// leg still does zero net work. This is what fic_wrench applies.
double bounded_convergence_force(double err, double x_max_err, double stored_energy,
                                 const FicParams& p);

AxisFicState update_phase(const AxisFicState& state, const AxisErrorState& e,
                          const FicParams& p, double vel_epsilon = kDefaultVelEpsilon);

FicWrench fic_wrench(const AxisErrorState& e, const AxisFicState& state, const FicParams& p,
                     double vel_epsilon = kDefaultVelEpsilon);

/// Largest stiffness-term magnitude the controller can produce: the force at
/// the top of the unsaturated band.
double stiffness_force_bound(const FicParams& p);

}  // namespace fic_teleop
