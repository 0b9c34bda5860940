#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmflux/dynamics.hpp"
#include "nmflux/measure.hpp"

namespace nmflux {

/// r = R - mean(R) (discrete mean over the samples).
std::vector<double> detrend(const FluxSeries& flux);
std::vector<double> detrend(std::span<const double> values);

/// Multiplies in place by the periodic Hann window 0.5 (1 - cos(2 pi m / N)).
void apply_hann(std::vector<double>& r);

/// S_k = sum_m r_m exp(-2 pi i m k / N), so that
///   sum_m |r_m|^2 = (1/N) sum_k |S_k|^2.
/// `omega` holds the angular frequencies 2 pi k / (N dt) for k = 0 .. N/2;
/// `s_values` and `power` hold all N bins.
struct SpectrumResult {
  std::size_t n = 0;
  double dt = 0.0;
  std::vector<double> omega;
  std::vector<cplx> s_values;
  std::vector<double> power;
  double signal_scale = 0.0;  ///< max |r|, used for the no-signal floor

  double bin_width() const { return 2.0 * 3.14159265358979323846 / (static_cast<double>(n) * dt); }
  double total_power() const;
};

SpectrumResult dft(std::span<const double> r, double dt);

/// Omega(V, delta) = sqrt(4 V^2 + delta^2).
double coherent_frequency(double v, double delta);

/// Region of the (V, delta) plane over which the threshold is maximised.
struct ParameterDomain {
  double v_min = 0.05;
  double v_max = 1.2;
  double delta_min = 0.0;
  double delta_max = 2.0;
};

struct Threshold {
  double omega_m = 0.0;
  double v_star = 0.0;
  double delta_star = 0.0;
};

/// Largest Omega over the Markovian part of the domain, read off the boundary:
/// at each delta the Markovian couplings are [v_min, v_markovian].
Threshold threshold_frequency(const BoundaryCurve& boundary, const ParameterDomain& domain = {});

struct Peak {
  double omega = 0.0;
  double prominence = 0.0;  ///< peak-bin power / total power (all N bins)
  std::size_t bin = 0;
  bool resolved = false;  ///< a local maximum beyond the low-frequency skirt
};

/// Strongest spectral line at k >= 1, with parabolic interpolation between
/// the neighbouring bins.
///
/// A decaying flux puts a low-frequency skirt into bins 1, 2, ... that
/// falls off monotonically. The search starts at the first local minimum
/// after k = 1 so the skirt cannot mask a genuine oscillation peak; if the
/// spectrum keeps falling, the peak is the skirt itself (bin 1) and is
/// reported as not resolved.
/// Throws NoSignal when the total power is below 1e-30 (N * scale)^2.
Peak dominant_peak(const SpectrumResult& spectrum);

enum class Verdict { Markovian, NonMarkovianUndetectable, NonMarkovianDetected, MarkovianConsistent };

std::string to_string(Verdict v);

struct RegionVerdict {
  Verdict label = Verdict::MarkovianConsistent;
  double omega_peak = 0.0;
  double omega_threshold = 0.0;
  double prominence = 0.0;
  ModelParams params;
  std::optional<bool> ground_truth_nonmarkovian;
  bool no_signal = false;
  bool peak_resolved = false;
};

struct ClassifyOptions {
  double min_prominence = 0.02;
  double dt = kDefaultStep;  ///< sampling step of the analytic flux, units of 1/gamma
  bool ground_truth = false;
  bool hann_window = false;  ///< taper the detrended flux before the transform
  DetectionOptions detection{};
};

/// Detector verdict from the analytic flux on [0, params.t_max]:
/// NonMarkovianDetected when a resolved peak lies above omega_threshold with
/// sufficient prominence, MarkovianConsistent otherwise. With ground truth
/// requested a negative verdict is refined to NonMarkovianUndetectable or
/// Markovian.
RegionVerdict classify(const ModelParams& p, double omega_threshold, const ClassifyOptions& opt = {});

/// Same decision from a measured flux on a uniform grid (e.g. an MCWF estimate).
RegionVerdict classify_flux(const FluxSeries& flux, const ModelParams& p, double omega_threshold,
                            const ClassifyOptions& opt = {});

void write_spectrum_csv(std::ostream& os, const SpectrumResult& s);
std::string verdict_json(const RegionVerdict& v);

}  // namespace nmflux
