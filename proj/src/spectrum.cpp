#include "nmflux/spectrum.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <ostream>

#include "json.hpp"
#include "nmflux/error.hpp"
#include "nmflux/format.hpp"
#include "nmflux/io.hpp"

namespace nmflux {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  fftw_complex* data;
};

}  // namespace

std::vector<double> detrend(std::span<const double> values) {
  std::vector<double> r(values.begin(), values.end());
  if (r.empty()) return r;
  const auto n = static_cast<double>(r.size());
  // second pass removes the rounding residue of the first
  for (int pass = 0; pass < 2; ++pass) {
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
    for (double& x : r) x -= mean;
  }
  return r;
}

void apply_hann(std::vector<double>& r) {
  const auto n = static_cast<double>(r.size());
  for (std::size_t m = 0; m < r.size(); ++m)
    r[m] *= 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(m) / n));
}

std::vector<double> detrend(const FluxSeries& flux) { return detrend(std::span<const double>(flux.values)); }

double SpectrumResult::total_power() const { return std::accumulate(power.begin(), power.end(), 0.0); }

SpectrumResult dft(std::span<const double> r, double dt) {
  if (r.size() < 2) throw InvalidParams("samples", "need at least 2 samples");
  if (!(dt > 0.0)) throw InvalidParams("dt", "must be > 0");
  const std::size_t n = r.size();
  FftwBuffer in(n), out(n);
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), in.data, out.data, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t m = 0; m < n; ++m) {
    in.data[m][0] = r[m];
    in.data[m][1] = 0.0;
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
  }

  SpectrumResult s;
  s.n = n;
  s.dt = dt;
  s.s_values.resize(n);
  s.power.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.s_values[k] = {out.data[k][0], out.data[k][1]};
    s.power[k] = std::norm(s.s_values[k]);
  }
  const std::size_t half = n / 2;
  s.omega.resize(half + 1);
  for (std::size_t k = 0; k <= half; ++k) s.omega[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / (static_cast<double>(n) * dt);
  for (double x : r) s.signal_scale = std::max(s.signal_scale, std::abs(x));
  return s;
}

double coherent_frequency(double v, double delta) { return std::sqrt(4.0 * v * v + delta * delta); }

Threshold threshold_frequency(const BoundaryCurve& boundary, const ParameterDomain& dom) {
  Threshold best;
  bool found = false;
  auto consider = [&](double v, double delta) {
    const double omega = coherent_frequency(v, delta);
    if (!found || omega > best.omega_m) best = {omega, v, delta};
    found = true;
  };
  for (const auto& pt : boundary.points) {
    if (pt.delta < dom.delta_min || pt.delta > dom.delta_max) continue;
    const double v = std::min(pt.v_markovian, dom.v_max);
    if (v < dom.v_min) continue;
    consider(v, pt.delta);
  }
  for (double delta : boundary.all_markovian) {
    if (delta < dom.delta_min || delta > dom.delta_max) continue;
    const double v = std::min(boundary.v_hi, dom.v_max);
    if (v >= dom.v_min) consider(v, delta);
  }
  if (!found) throw EmptyRegion("no Markovian points inside the domain");
  return best;
}

Peak dominant_peak(const SpectrumResult& s) {
  const std::size_t half = s.n / 2;
  const double total = s.total_power();
  const double floor = 1e-30 * std::pow(static_cast<double>(s.n) * s.signal_scale, 2);
  if (half < 1 || total <= floor) throw NoSignal("spectrum carries no power");

  const auto& P = s.power;
  std::size_t trough = 1;
  while (trough < half && P[trough + 1] < P[trough]) ++trough;
  auto argmax = [&](std::size_t from) {
    std::size_t k = from;
    for (std::size_t j = from + 1; j <= half; ++j)
      if (P[j] > P[k]) k = j;
    return k;
  };
  std::size_t k = trough < half ? argmax(trough) : trough;
  const bool resolved = k != trough;
  if (!resolved) k = argmax(1);

  double offset = 0.0;
  if (k + 1 < s.n) {
    const double y0 = P[k - 1], y1 = P[k], y2 = P[k + 1];
    const double curvature = y0 - 2.0 * y1 + y2;
    if (curvature < 0.0) offset = std::clamp(0.5 * (y0 - y2) / curvature, -0.5, 0.5);
  }
  return {2.0 * std::numbers::pi * (static_cast<double>(k) + offset) / (static_cast<double>(s.n) * s.dt),
          P[k] / total, k, resolved};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Markovian: return "Markovian";
    case Verdict::NonMarkovianUndetectable: return "NonMarkovianUndetectable";
    case Verdict::NonMarkovianDetected: return "NonMarkovianDetected";
    case Verdict::MarkovianConsistent: return "MarkovianConsistent";
  }
  return "?";
}

namespace {

RegionVerdict decide(std::span<const double> values, double dt, const ModelParams& p, double omega_threshold,
                     const ClassifyOptions& opt) {
  RegionVerdict v;
  v.params = p;
  v.omega_threshold = omega_threshold;
  bool detected = false;
  try {
    std::vector<double> r = detrend(values);
    if (opt.hann_window) apply_hann(r);
    const Peak peak = dominant_peak(dft(r, dt));
    v.omega_peak = peak.omega;
    v.prominence = peak.prominence;
    v.peak_resolved = peak.resolved;
    detected = peak.resolved && peak.omega > omega_threshold && peak.prominence >= opt.min_prominence;
  } catch (const NoSignal&) {
    v.no_signal = true;
  }
  v.label = detected ? Verdict::NonMarkovianDetected : Verdict::MarkovianConsistent;
  if (opt.ground_truth) {
    const bool nm = is_nonmarkovian(p, opt.detection);
    v.ground_truth_nonmarkovian = nm;
    if (!detected) v.label = nm ? Verdict::NonMarkovianUndetectable : Verdict::Markovian;
  }
  return v;
}

}  // namespace

RegionVerdict classify(const ModelParams& p, double omega_threshold, const ClassifyOptions& opt) {
  p.validate();
  const TimeGrid grid = TimeGrid::covering(p.t_max, opt.dt / p.gamma);
  const FluxSeries flux = photon_flux_analytic(p, grid);
  return decide(flux.values, grid.dt, p, omega_threshold, opt);
}

RegionVerdict classify_flux(const FluxSeries& flux, const ModelParams& p, double omega_threshold,
                            const ClassifyOptions& opt) {
  if (flux.times.size() < 2 || flux.times.size() != flux.values.size())
    throw GridMismatch("flux needs at least two samples with matching times");
  const double dt = flux.times[1] - flux.times[0];
  for (std::size_t i = 2; i < flux.times.size(); ++i)
    if (std::abs(flux.times[i] - flux.times[i - 1] - dt) > 1e-9 * std::max(1.0, dt))
      throw GridMismatch("flux samples are not uniformly spaced");
  return decide(flux.values, dt, p, omega_threshold, opt);
}

void write_spectrum_csv(std::ostream& os, const SpectrumResult& s) {
  os << "omega,power\n";
  for (std::size_t k = 0; k < s.omega.size(); ++k) os << fmt_double(s.omega[k]) << ',' << fmt_double(s.power[k]) << '\n';
}

std::string verdict_json(const RegionVerdict& v) {
  nlohmann::ordered_json j;
  j["label"] = to_string(v.label);
  j["omega_peak"] = v.omega_peak;
  j["omega_threshold"] = v.omega_threshold;
  j["prominence"] = v.prominence;
  j["peak_resolved"] = v.peak_resolved;
  j["params"] = params_json(v.params);
  if (v.ground_truth_nonmarkovian) j["ground_truth_nonmarkovian"] = *v.ground_truth_nonmarkovian;
  if (v.no_signal) j["note"] = "no signal: flux is identically zero";
  return j.dump(2);
}

}  // namespace nmflux
