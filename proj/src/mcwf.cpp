#include "nmflux/mcwf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "nmflux/error.hpp"
#include "nmflux/format.hpp"
#include "nmflux/io.hpp"
#include "nmflux/parallel.hpp"
#include "nmflux/version.hpp"

namespace nmflux {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t trajectory_seed(std::uint64_t master_seed, std::uint64_t index) {
  return splitmix64(master_seed + 0x9E3779B97F4A7C15ULL * (index + 1));
}

double uniform_from_seed(std::uint64_t seed) {
  return (static_cast<double>(splitmix64(seed) >> 11) + 0.5) * 0x1.0p-53;
}

SurvivalTable::SurvivalTable(const ModelParams& p, double dt)
    : params_(p), d_(splitting(p)), ground2_(std::norm(p.ground_amplitude())) {
  p.validate();
  const auto n = static_cast<std::size_t>(std::ceil(p.t_max / dt - 1e-9)) + 1;
  times_.resize(n);
  table_.resize(n);
  double running = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    times_[i] = std::min(static_cast<double>(i) * dt, p.t_max);
    running = std::min(running, survival(times_[i]));
    table_[i] = running;
  }
}

double SurvivalTable::survival(double t) const {
  const Amplitudes a = detail::amplitudes_with_root(params_, t, d_);
  return std::norm(a.c) + std::norm(a.b) + ground2_;
}

std::optional<double> SurvivalTable::jump_time(double u) const {
  // first index whose (non-increasing) survival is <= u
  const auto it = std::partition_point(table_.begin(), table_.end(), [u](double s) { return s > u; });
  if (it == table_.end()) return std::nullopt;
  const auto i = static_cast<std::size_t>(it - table_.begin());
  if (i == 0) return 0.0;
  double lo = times_[i - 1];
  double hi = times_[i];
  const double tol = 1e-10 / params_.gamma;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (survival(mid) > u)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

TrajectoryOutcome simulate_trajectory(const SurvivalTable& table, std::uint64_t seed) {
  return {table.jump_time(uniform_from_seed(seed)), seed};
}

TrajectoryOutcome simulate_trajectory(const ModelParams& p, std::uint64_t seed) {
  return simulate_trajectory(SurvivalTable(p), seed);
}

JumpRecord simulate_record(const ModelParams& p, std::uint64_t n_traj, std::uint64_t master_seed, unsigned workers) {
  if (n_traj < 1) throw InvalidParams("n_traj", "must be >= 1");
  const SurvivalTable table(p);
  JumpRecord rec{p, master_seed, n_traj, std::vector<TrajectoryOutcome>(n_traj)};
  parallel_for(n_traj, workers, [&](std::size_t i) {
    rec.outcomes[i] = simulate_trajectory(table, trajectory_seed(master_seed, i));
  });
  return rec;
}

FluxSeries bin_jumps(const JumpRecord& record, double bin_width) {
  const double t_max = record.params.t_max;
  if (!(std::isfinite(bin_width) && bin_width > 0.0 && bin_width <= t_max))
    throw InvalidBinning("bin width " + fmt_double(bin_width) + " must lie in (0, T]");
  const auto n_bins = static_cast<std::size_t>(std::floor(t_max / bin_width + 1e-9));
  const double covered = static_cast<double>(n_bins) * bin_width;

  FluxSeries f;
  f.kind = FluxKind::McwfEstimate;
  f.n_traj = record.n_traj;
  f.bin_width = bin_width;
  f.counts.assign(n_bins, 0);
  if (t_max - covered > 1e-9 * t_max)
    f.warnings.push_back("partial bin [" + fmt_double(covered) + ", " + fmt_double(t_max) + "] dropped");

  for (const auto& o : record.outcomes) {
    if (!o.jump_time) continue;
    const double t = *o.jump_time;
    if (t > covered * (1.0 + 1e-12)) continue;
    const auto k = std::min(n_bins - 1, static_cast<std::size_t>(t / bin_width));
    ++f.counts[k];
  }
  const double norm = static_cast<double>(record.n_traj) * bin_width;
  f.times.resize(n_bins);
  f.values.resize(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    f.times[k] = (static_cast<double>(k) + 0.5) * bin_width;
    f.values[k] = static_cast<double>(f.counts[k]) / norm;
  }
  return f;
}

FluxSeries estimate_flux(const ModelParams& p, std::uint64_t n_traj, double bin_width, std::uint64_t master_seed,
                         unsigned workers) {
  p.validate();
  if (!(std::isfinite(bin_width) && bin_width > 0.0 && bin_width <= p.t_max))
    throw InvalidBinning("bin width " + fmt_double(bin_width) + " must lie in (0, T]");
  return bin_jumps(simulate_record(p, n_traj, master_seed, workers), bin_width);
}

ResidualStats flux_residual_stats(const FluxSeries& estimate, const FluxSeries& analytic, double k_sigma) {
  const std::size_t n = estimate.values.size();
  if (analytic.values.size() != n || analytic.times.size() != n || estimate.times.size() != n)
    throw GridMismatch("estimate has " + std::to_string(n) + " bins, analytic " +
                       std::to_string(analytic.values.size()) + " points");
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(estimate.times[k] - analytic.times[k]) > 1e-9 * std::max(1.0, std::abs(estimate.times[k])))
      throw GridMismatch("time mismatch at bin " + std::to_string(k));
  }
  ResidualStats s;
  s.bins = n;
  s.k_sigma = k_sigma;
  if (n == 0) return s;
  const bool has_counts = estimate.counts.size() == n && estimate.n_traj > 0 && estimate.bin_width > 0.0;
  const double norm = has_counts ? static_cast<double>(estimate.n_traj) * estimate.bin_width : 0.0;
  double sum2 = 0.0;
  std::size_t within = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double r = estimate.values[k] - analytic.values[k];
    sum2 += r * r;
    double z = 0.0;
    if (r != 0.0) {
      const double sigma = has_counts ? std::sqrt(std::max<double>(static_cast<double>(estimate.counts[k]), 1.0)) / norm : 0.0;
      z = sigma > 0.0 ? std::abs(r) / sigma : std::numeric_limits<double>::infinity();
    }
    s.max_abs_z = std::max(s.max_abs_z, z);
    if (z <= k_sigma) ++within;
  }
  s.rms = std::sqrt(sum2 / static_cast<double>(n));
  s.fraction_within = static_cast<double>(within) / static_cast<double>(n);
  return s;
}

double jump_cdf_distance(const JumpRecord& record) {
  const SurvivalTable table(record.params);
  std::vector<double> times;
  times.reserve(record.outcomes.size());
  for (const auto& o : record.outcomes)
    if (o.jump_time) times.push_back(*o.jump_time);
  std::sort(times.begin(), times.end());
  const auto n = static_cast<double>(record.outcomes.size());
  const double s0 = table.survival(0.0);
  double dist = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double model = s0 - table.survival(times[i]);
    dist = std::max({dist, static_cast<double>(i + 1) / n - model, model - static_cast<double>(i) / n});
  }
  const double tail = s0 - table.survival(record.params.t_max);
  dist = std::max(dist, std::abs(static_cast<double>(times.size()) / n - tail));
  return dist;
}

double dkw_band(std::uint64_t n, double alpha) {
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

void write_jump_csv(std::ostream& os, const JumpRecord& record) {
  os << "trajectory_index,jump_time\n";
  for (std::size_t i = 0; i < record.outcomes.size(); ++i) {
    os << i << ',';
    if (record.outcomes[i].jump_time) os << fmt_double(*record.outcomes[i].jump_time);
    os << '\n';
  }
}

std::string jump_manifest_json(const JumpRecord& record, double bin_width) {
  nlohmann::ordered_json j;
  j["params"] = params_json(record.params);
  j["master_seed"] = record.master_seed;
  j["n_traj"] = record.n_traj;
  j["bin_width"] = bin_width;
  j["rng"] = "splitmix64 counter (seed_i = splitmix64(master + golden*(i+1)))";
  j["engine_version"] = kEngineVersion;
  return j.dump(2) + "\n";
}

}  // namespace nmflux
