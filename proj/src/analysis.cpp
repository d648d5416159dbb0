#include "fic_teleop/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace fic_teleop {

namespace {

using cd = std::complex<double>;

struct FftwPlan {
  std::size_t n;
  double* in;
  fftw_complex* out;
  fftw_plan plan;

  explicit FftwPlan(std::size_t len) : n(len) {
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
  }
  ~FftwPlan() {
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  void transform(const double* x, const std::vector<double>& window, std::vector<cd>& spec) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += x[i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = (x[i] - mean) * window[i];
    fftw_execute(plan);
    spec.resize(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) spec[k] = cd(out[k][0], out[k][1]);
  }
};

}  // namespace

FrequencyResponse estimate_frf(const std::vector<double>& input, const std::vector<double>& output,
                               double sample_rate, std::size_t window_len) {
  if (input.size() != output.size()) throw AnalysisError("input and output lengths differ");
  if (!(sample_rate > 0.0)) throw AnalysisError("sample rate must be positive");
  if (window_len < 4) throw AnalysisError("window must have at least 4 samples");
  if (input.size() < window_len) {
    throw AnalysisError("series of " + std::to_string(input.size()) +
                        " samples is shorter than one window of " + std::to_string(window_len));
  }
  std::vector<double> window(window_len);
  for (std::size_t i = 0; i < window_len; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(window_len));
  }
  const std::size_t hop = window_len / 2;
  const std::size_t nbins = window_len / 2 + 1;
  std::vector<double> sxx(nbins, 0.0), syy(nbins, 0.0);
  std::vector<cd> sxy(nbins, 0.0);
  std::vector<cd> X, Y;
  FftwPlan fft(window_len);
  for (std::size_t start = 0; start + window_len <= input.size(); start += hop) {
    fft.transform(input.data() + start, window, X);
    fft.transform(output.data() + start, window, Y);
    for (std::size_t k = 0; k < nbins; ++k) {
      sxx[k] += std::norm(X[k]);
      syy[k] += std::norm(Y[k]);
      sxy[k] += std::conj(X[k]) * Y[k];
    }
  }
  FrequencyResponse frf;
  for (std::size_t k = 1; k < nbins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / static_cast<double>(window_len);
    const cd h = sxx[k] > 0.0 ? sxy[k] / sxx[k] : cd(0.0, 0.0);
    const double denom = sxx[k] * syy[k];
    const double coh = denom > 0.0 ? std::min(1.0, std::norm(sxy[k]) / denom) : 0.0;
    frf.freqs.push_back(f);
    frf.h.push_back(h);
    frf.magnitude.push_back(std::abs(h));
    frf.phase.push_back(std::arg(h));
    frf.coherence.push_back(coh);
  }
  return frf;
}

FrequencyResponse log_bin(const FrequencyResponse& frf, int bands_per_decade) {
  if (bands_per_decade <= 0) throw AnalysisError("bands_per_decade must be positive");
  FrequencyResponse out;
  if (frf.freqs.empty()) return out;
  const double step = 1.0 / bands_per_decade;
  std::size_t i = 0;
  while (i < frf.freqs.size()) {
    const double band = std::floor(std::log10(frf.freqs[i]) / step);
    const double upper = std::pow(10.0, (band + 1.0) * step);
    cd h_sum = 0.0;
    double coh_sum = 0.0, logf_sum = 0.0;
    std::size_t count = 0;
    while (i < frf.freqs.size() && frf.freqs[i] < upper) {
      h_sum += frf.h[i];
      coh_sum += frf.coherence[i];
      logf_sum += std::log(frf.freqs[i]);
      ++count;
      ++i;
    }
    if (count == 0) {
      ++i;
      continue;
    }
    const cd h = h_sum / static_cast<double>(count);
    out.freqs.push_back(std::exp(logf_sum / static_cast<double>(count)));
    out.h.push_back(h);
    out.magnitude.push_back(std::abs(h));
    out.phase.push_back(std::arg(h));
    out.coherence.push_back(coh_sum / static_cast<double>(count));
  }
  return out;
}

std::vector<double> unwrap(const std::vector<double>& phase) {
  std::vector<double> out(phase);
  double offset = 0.0;
  for (std::size_t i = 1; i < phase.size(); ++i) {
    const double d = phase[i] - phase[i - 1];
    if (d > std::numbers::pi) offset -= 2.0 * std::numbers::pi;
    if (d < -std::numbers::pi) offset += 2.0 * std::numbers::pi;
    out[i] = phase[i] + offset;
  }
  return out;
}

Cutoff cutoff_frequency(const FrequencyResponse& frf, double band_lo, double band_hi,
                        double coherence_min) {
  if (!(band_lo < band_hi)) throw AnalysisError("reference band must have lo < hi");
  Cutoff c;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < frf.freqs.size(); ++i) {
    if (frf.freqs[i] >= band_lo && frf.freqs[i] <= band_hi && frf.coherence[i] >= coherence_min) {
      sum += frf.magnitude[i];
      ++count;
    }
  }
  if (count == 0) {
    c.note = "no coherent bins in the reference band";
    return c;
  }
  c.reference_magnitude = sum / static_cast<double>(count);
  const double threshold = c.reference_magnitude / std::sqrt(2.0);
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < frf.freqs.size(); ++i) {
    if (frf.freqs[i] <= band_hi || frf.coherence[i] < coherence_min) continue;
    if (frf.magnitude[i] < threshold) {
      if (!prev) {
        c.frequency = frf.freqs[i];
      } else {
        // Interpolate the crossing in log frequency and dB.
        const std::size_t j = *prev;
        const double m0 = 20.0 * std::log10(frf.magnitude[j]);
        const double m1 = 20.0 * std::log10(frf.magnitude[i]);
        const double mt = 20.0 * std::log10(threshold);
        const double s = (m0 - mt) / (m0 - m1);
        c.frequency = std::exp(std::log(frf.freqs[j]) +
                               s * (std::log(frf.freqs[i]) - std::log(frf.freqs[j])));
      }
      return c;
    }
    prev = i;
  }
  c.note = "out of band: no -3 dB crossing among coherent bins";
  return c;
}

double EnergyLedger::worst_excess() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) worst = std::max(worst, extracted[i] - injected[i]);
  return worst;
}

namespace {

std::vector<std::string> axis_suffixes(const ExperimentLog& log) {
  std::vector<std::string> axes;
  for (const char* a : {"x", "y", "a"}) {
    if (log.has(std::string("stiff_") + a)) axes.emplace_back(a);
  }
  return axes;
}

}  // namespace

EnergyLedger energy_audit(const ExperimentLog& log) {
  if (!log.has("t")) throw AnalysisError("log has no time column");
  const auto axes = axis_suffixes(log);
  if (axes.empty()) throw AnalysisError("log has no controller wrench columns (stiff_*)");
  const std::vector<double> t = log.series("t");
  const std::size_t n = t.size();
  EnergyLedger ledger;
  ledger.t = t;
  ledger.injected.assign(n, 0.0);
  ledger.extracted.assign(n, 0.0);
  ledger.stored.assign(n, 0.0);
  for (const auto& a : axes) {
    if (log.has("stored_" + a)) {
      const auto s = log.series("stored_" + a);
      for (std::size_t i = 0; i < n; ++i) ledger.stored[i] += s[i];
    }
  }

  std::vector<double> work(n, 0.0);  // work over (t[i-1], t[i]]
  try {
    if (log.has("port_power")) {
      const auto p = log.series("port_power");
      for (std::size_t i = 1; i < n; ++i) work[i] = p[i] * (t[i] - t[i - 1]);
    } else {
      std::vector<double> power(n, 0.0);
      for (const auto& a : axes) {
        const auto fs = log.series("stiff_" + a);
        const auto fd = log.series("damp_" + a);
        const auto v = log.series("ee_v" + a);
        const auto vr = log.series("xd_rate_" + a);
        for (std::size_t i = 0; i < n; ++i) power[i] += (fs[i] + fd[i]) * v[i] - fs[i] * vr[i];
      }
      for (std::size_t i = 1; i < n; ++i) work[i] = 0.5 * (power[i] + power[i - 1]) * (t[i] - t[i - 1]);
    }
  } catch (const LogError& e) {
    throw AnalysisError(e.what());
  }
  for (std::size_t i = 1; i < n; ++i) {
    ledger.injected[i] = ledger.injected[i - 1] + std::max(0.0, -work[i]);
    ledger.extracted[i] = ledger.extracted[i - 1] + std::max(0.0, work[i]);
  }
  return ledger;
}

std::vector<double> impulse_overshoots(const ExperimentLog& log) {
  std::vector<double> out;
  if (!log.has("hammer_x") || !log.has("err_x")) return out;
  const auto hx = log.series("hammer_x");
  const auto hy = log.series("hammer_y");
  const auto ex = log.series("err_x");
  const auto ey = log.series("err_y");
  const std::size_t n = hx.size();
  std::vector<std::size_t> onsets;
  bool on = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool now = std::hypot(hx[i], hy[i]) > 0.0;
    if (now && !on) onsets.push_back(i);
    on = now;
  }
  for (std::size_t k = 0; k < onsets.size(); ++k) {
    const std::size_t begin = onsets[k];
    const std::size_t end = k + 1 < onsets.size() ? onsets[k + 1] : n;
    std::size_t peak = begin;
    for (std::size_t i = begin; i < end; ++i) {
      if (std::hypot(ex[i], ey[i]) > std::hypot(ex[peak], ey[peak])) peak = i;
    }
    const double peak_mag = std::hypot(ex[peak], ey[peak]);
    if (peak_mag <= 0.0) {
      out.push_back(0.0);
      continue;
    }
    const double ux = ex[peak] / peak_mag, uy = ey[peak] / peak_mag;
    double worst = 0.0;
    bool crossed = false;
    for (std::size_t i = peak; i < end; ++i) {
      const double p = ex[i] * ux + ey[i] * uy;
      if (p <= 0.0) crossed = true;
      if (crossed) worst = std::max(worst, -p);
    }
    out.push_back(worst / peak_mag);
  }
  return out;
}

TaskMetrics task_metrics(const ExperimentLog& log) {
  TaskMetrics m;
  const std::vector<double> t = log.series("t");
  if (log.has("ffb_pre_x")) {
    const auto fx = log.series("ffb_pre_x");
    const auto fy = log.series("ffb_pre_y");
    for (std::size_t i = 0; i < fx.size(); ++i) m.peak_force = std::max(m.peak_force, std::hypot(fx[i], fy[i]));
  }
  if (log.has("err_x")) {
    const auto ex = log.series("err_x");
    const auto ey = log.series("err_y");
    for (std::size_t i = 0; i < ex.size(); ++i) {
      m.max_position_error = std::max(m.max_position_error, std::hypot(ex[i], ey[i]));
    }
  }
  const auto shoots = impulse_overshoots(log);
  for (double s : shoots) m.overshoot = std::max(m.overshoot, s);

  std::vector<std::vector<double>> buttons;
  for (int i = 0; log.has("button_" + std::to_string(i)); ++i) {
    buttons.push_back(log.series("button_" + std::to_string(i)));
  }
  if (buttons.empty()) {
    m.success = !t.empty();
    return m;
  }
  double last_release = -1.0;
  for (const auto& b : buttons) {
    bool seen = false;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i] > 0.5) seen = true;
      if (i > 0 && b[i - 1] > 0.5 && b[i] <= 0.5) last_release = std::max(last_release, t[i]);
    }
    m.buttons_activated += seen ? 1 : 0;
  }
  bool all_released = true;
  for (const auto& b : buttons) all_released = all_released && !b.empty() && b.back() <= 0.5;
  bool failed = false;
  if (log.has("op_phase")) {
    const auto phase = log.series("op_phase");
    failed = !phase.empty() && phase.back() == 5.0;  // PressPhase::kFailed
  }
  m.success = !failed && all_released && m.buttons_activated == static_cast<int>(buttons.size());
  if (m.success && last_release >= 0.0) m.completion_time = last_release;
  if (m.success && !m.completion_time) m.success = false;
  return m;
}

}  // namespace fic_teleop
