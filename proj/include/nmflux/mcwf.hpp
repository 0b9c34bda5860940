#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nmflux/dynamics.hpp"

namespace nmflux {

// Random numbers
// --------------
// Trajectory i of a run with master seed s uses the seed
//   seed_i = splitmix64(s + 0x9E3779B97F4A7C15 * (i + 1))
// and a single uniform draw u = ((splitmix64(seed_i) >> 11) + 0.5) / 2^53,
// which lies strictly inside (0, 1). Both steps are pure functions of
// (s, i), so records are reproducible for any thread count.

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index);
double uniform_from_seed(std::uint64_t seed);

struct TrajectoryOutcome {
  std::optional<double> jump_time;  ///< empty: no photon within [0, T]
  std::uint64_t seed = 0;
};

struct JumpRecord {
  ModelParams params;
  std::uint64_t master_seed = 0;
  std::uint64_t n_traj = 0;
  std::vector<TrajectoryOutcome> outcomes;
};

/// Squared norm of the no-jump state, N^2(t) = |c|^2 + |b|^2 + |c0_ground|^2,
/// tabulated on a grid for bracketing the inverse-transform search.
class SurvivalTable {
 public:
  explicit SurvivalTable(const ModelParams& p, double dt = kDefaultStep);

  double survival(double t) const;
  double horizon() const { return params_.t_max; }

  /// Earliest t in [0, T] with N^2(t) <= u, or nothing if N^2(T) > u.
  /// Bisection stops once the bracket is narrower than 1e-10 / gamma.
  std::optional<double> jump_time(double u) const;

 private:
  ModelParams params_;
  cplx d_;
  double ground2_;
  std::vector<double> times_;
  std::vector<double> table_;  // running minimum, hence non-increasing
};

TrajectoryOutcome simulate_trajectory(const SurvivalTable& table, std::uint64_t seed);
TrajectoryOutcome simulate_trajectory(const ModelParams& p, std::uint64_t seed);

JumpRecord simulate_record(const ModelParams& p, std::uint64_t n_traj, std::uint64_t master_seed,
                           unsigned workers = 1);

/// Time-binned flux estimate count_k / (n_traj * bin_width). A trailing
/// partial bin is dropped with a warning.
FluxSeries bin_jumps(const JumpRecord& record, double bin_width);

FluxSeries estimate_flux(const ModelParams& p, std::uint64_t n_traj, double bin_width,
                         std::uint64_t master_seed, unsigned workers = 1);

struct ResidualStats {
  std::size_t bins = 0;
  double rms = 0.0;          ///< sqrt(mean (estimate - analytic)^2)
  double max_abs_z = 0.0;    ///< largest |residual| / sigma
  double fraction_within = 1.0;
  double k_sigma = 3.0;
};

/// Compares a binned estimate against the analytic flux at the bin centres.
/// sigma_k = sqrt(max(count_k, 1)) / (n_traj * bin_width); for an estimate
/// without counts sigma is zero and any nonzero residual counts as outside.
ResidualStats flux_residual_stats(const FluxSeries& estimate, const FluxSeries& analytic, double k_sigma = 3.0);

/// Kolmogorov distance between the empirical jump-time CDF (no-jump counted
/// as beyond T) and the exact CDF 1 - N^2(t) on [0, T].
double jump_cdf_distance(const JumpRecord& record);

/// Dvoretzky-Kiefer-Wolfowitz half-width at confidence 1 - alpha.
double dkw_band(std::uint64_t n, double alpha);

void write_jump_csv(std::ostream& os, const JumpRecord& record);
std::string jump_manifest_json(const JumpRecord& record, double bin_width);

}  // namespace nmflux
