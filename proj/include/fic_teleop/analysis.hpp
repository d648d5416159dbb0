#pragma once

// Offline analysis of experiment logs: Welch transfer-function estimates,
// cut-off extraction, the controller-port energy ledger, and task metrics.

#include <complex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fic_teleop/experiment_log.hpp"

namespace fic_teleop {

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FrequencyResponse {
  std::vector<double> freqs;  // Hz, strictly increasing
  std::vector<std::complex<double>> h;
  std::vector<double> magnitude;
  std::vector<double> phase;      // rad, wrapped to (-pi, pi]
  std::vector<double> coherence;  // [0, 1]
};

/// H1 estimate S_xy / S_xx with Hann windows and 50% overlap. Segment means
/// are removed. The DC bin is dropped.
FrequencyResponse estimate_frf(const std::vector<double>& input, const std::vector<double>& output,
                               double sample_rate, std::size_t window_len);

/// Averages the complex response and coherence of the bins falling in each
/// logarithmic band; empty bands are skipped.
FrequencyResponse log_bin(const FrequencyResponse& frf, int bands_per_decade);

std::vector<double> unwrap(const std::vector<double>& phase);

inline constexpr double kCoherenceThreshold = 0.6;

struct Cutoff {
  std::optional<double> frequency;  // Hz; empty when out of band
  double reference_magnitude = 0.0;
  std::string note;
};

/// First frequency above the reference band where the magnitude is 3 dB
/// below the band's mean magnitude. Bins with coherence below the threshold
/// are not evaluated.
Cutoff cutoff_frequency(const FrequencyResponse& frf, double band_lo, double band_hi,
                        double coherence_min = kCoherenceThreshold);

struct EnergyLedger {
  std::vector<double> t;
  std::vector<double> injected;   // cumulative energy absorbed by the controller, J
  std::vector<double> extracted;  // cumulative energy delivered by the controller, J
  std::vector<double> stored;     // controller-stored energy per row, J

  /// max over rows of extracted - injected.
  double worst_excess() const;
};

/// Integrates the controller port power. Uses the interval-mean
/// `port_power` column when present, otherwise trapezoidal integration of
/// (stiff + damp) . ee_v - stiff . xd_rate.
EnergyLedger energy_audit(const ExperimentLog& log);

struct TaskMetrics {
  bool success = false;
  std::optional<double> completion_time;  // s
  double peak_force = 0.0;                // N, largest measured end-effector force
  double overshoot = 0.0;                 // fraction of the peak excursion
  double max_position_error = 0.0;        // m
  int buttons_activated = 0;
};

TaskMetrics task_metrics(const ExperimentLog& log);

/// Overshoot of the response following each hammer impulse: the largest
/// excursion past zero along the direction of the peak error, relative to
/// the peak error. One entry per impulse.
std::vector<double> impulse_overshoots(const ExperimentLog& log);

}  // namespace fic_teleop
