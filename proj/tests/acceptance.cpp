// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "nmflux/dynamics.hpp"
#include "nmflux/mcwf.hpp"
#include "nmflux/measure.hpp"
#include "nmflux/parallel.hpp"
#include "nmflux/spectrum.hpp"
#include "nmflux/sweep.hpp"
#include "oracles.hpp"

using namespace nmflux;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] %2d %-28s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

class Stopwatch {
 public:
  double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string str(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

ModelParams point(double v, double delta) {
  ModelParams p;
  p.v = v;
  p.delta = delta;
  p.t_max = 14.0;
  return p;
}

// 1: closed form vs adaptive Runge-Kutta on [0, 14]
void oracle_equivalence() {
  constexpr double kTol = 1e-8;
  constexpr double kLimit = 10.0;
  Stopwatch sw;
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> uv(0.0, 3.0), ud(-3.0, 3.0);
  std::vector<double> times;
  for (int i = 0; i <= 14000; ++i) times.push_back(i * 1e-3);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const ModelParams p = point(uv(rng), ud(rng));
    const auto ref = oracle::integrate_amplitudes(1.0, p.v, p.delta, {1.0, 0.0}, times);
    const AmplitudeSeries s = amplitudes_series(p, TimeGrid::covering(14.0, 1e-3));
    for (std::size_t i = 0; i < times.size(); ++i)
      worst = std::max({worst, std::abs(s.c[i] - ref[i].c), std::abs(s.b[i] - ref[i].b)});
  }
  const double t = sw.seconds();
  report(1, "oracle equivalence", worst <= kTol && t < kLimit,
         str("max |err| %.2e (tol %.0e) over 20 random points, %.2f s (limit %.0f s)", worst, kTol, t, kLimit));
}

// 2: |c|^2 + |b|^2 + integral of gamma |b|^2 = |c0|^2
void conservation() {
  constexpr double kTol = 1e-6;
  double worst = 0.0;
  const TimeGrid grid = TimeGrid::covering(14.0, 1e-3);
  for (double v : {0.2, 0.5, 1.0}) {
    for (double delta : {0.0, 1.0}) {
      const ModelParams p = point(v, delta);
      const AmplitudeSeries s = amplitudes_series(p, grid);
      const FluxSeries f = photon_flux_from(s, p.gamma);
      const auto emitted = oracle::cumulative_trapezoid(f.values, grid.dt);
      for (std::size_t i = 0; i < grid.size; ++i) worst = std::max(worst, std::abs(s.excitation(i) + emitted[i] - 1.0));
    }
  }
  report(2, "conservation", worst <= kTol, str("max defect %.2e (tol %.0e), six reference curves, dt = 1e-3", worst, kTol));
}

// 3: bisection at delta = 0
void boundary_reproduction() {
  constexpr double kTarget = 0.25, kTol = 0.005, kLimit = 5.0;
  Stopwatch sw;
  const BoundaryCurve c = markovian_boundary(std::vector<double>{0.0}, 0.05, 1.2, 1e-3);
  const double t = sw.seconds();
  const bool found = c.points.size() == 1;
  const double vc = found ? c.points[0].v_c() : -1.0;
  report(3, "boundary reproduction", found && std::abs(vc - kTarget) <= kTol && t < kLimit,
         str("V_c(0) = %.4f (target %.3f +- %.3f), %.2f s (limit %.0f s)", vc, kTarget, kTol, t, kLimit));
}

// 4: threshold frequency from the 200x200 sweep
double threshold_reproduction() {
  constexpr double kTarget = 1.8, kRel = 0.15, kLimit = 120.0;
  Stopwatch sw;
  SweepConfig cfg;
  cfg.workers = default_workers();
  const RegionMap map = run_sweep(cfg);
  const double t = sw.seconds();
  const double om = map.threshold.omega_m;
  report(4, "threshold reproduction",
         map.failures() == 0 && std::abs(om - kTarget) <= kRel * kTarget && t < kLimit,
         str("Omega_M = %.4f at (V, delta) = (%.3f, %.3f) (target %.1f +- %.0f%%), %zux%zu grid, %u workers, "
             "%.1f s (limit %.0f s)",
             om, map.threshold.v_star, map.threshold.delta_star, kTarget, 100 * kRel, map.delta_values.size(),
             map.v_values.size(), cfg.workers, t, kLimit));
  return om;
}

// 5: spectral peak at (delta, V) = (2, 2)
void peak_location() {
  constexpr double kTarget = 4.47;
  const TimeGrid grid = TimeGrid::covering(14.0, 1e-3);
  const SpectrumResult s = dft(detrend(photon_flux_analytic(point(2.0, 2.0), grid)), grid.dt);
  const Peak p = dominant_peak(s);
  report(5, "peak location", std::abs(p.omega - kTarget) <= s.bin_width(),
         str("omega_peak = %.4f (target %.2f +- one bin %.4f)", p.omega, kTarget, s.bin_width()));
}

// 6: verdicts of the four reference points
void verdict_table(double om) {
  ClassifyOptions detector;
  ClassifyOptions refined;
  refined.ground_truth = true;
  struct Row {
    double delta, v;
    const ClassifyOptions* opt;
    Verdict expected;
  };
  const Row rows[] = {{2.0, 2.0, &detector, Verdict::NonMarkovianDetected},
                      {0.0, 0.9, &refined, Verdict::NonMarkovianUndetectable},
                      {1.0, 0.7, &refined, Verdict::NonMarkovianUndetectable},
                      {1.7, 0.3, &detector, Verdict::MarkovianConsistent}};
  bool ok = true;
  std::string detail = str("Omega_M = %.4f, min_prominence = %.2f:", om, detector.min_prominence);
  for (const auto& r : rows) {
    const RegionVerdict v = classify(point(r.v, r.delta), om, *r.opt);
    ok &= v.label == r.expected;
    detail += str(" (%.1f,%.1f) %s [peak %.2f, prom %.3f, truth %s];", r.delta, r.v, to_string(v.label).c_str(),
                  v.omega_peak, v.prominence, is_nonmarkovian(r.v, r.delta) ? "NM" : "M");
  }
  report(6, "verdict table", ok, detail);
}

// 7: no detections on Markovian points of a 50x50 grid
void no_false_positives(double om) {
  const auto vs = linspace(0.05, 1.2, 50);
  const auto ds = linspace(0.0, 2.0, 50);
  std::vector<int> state(vs.size() * ds.size(), 0);  // 0 NM, 1 Markovian, 2 false positive
  parallel_for(state.size(), default_workers(), [&](std::size_t i) {
    const double v = vs[i % vs.size()], delta = ds[i / vs.size()];
    if (is_nonmarkovian(v, delta)) return;
    state[i] = classify(point(v, delta), om).label == Verdict::NonMarkovianDetected ? 2 : 1;
  });
  std::size_t markovian = 0, detected = 0;
  for (int s : state) markovian += s > 0, detected += s == 2;
  report(7, "no false positives", markovian > 0 && detected == 0,
         str("%zu detections among %zu Markovian cells of 2500", detected, markovian));
}

// 8: Monte Carlo flux and jump-time CDF
void mcwf_convergence() {
  constexpr double kLimit = 60.0;
  Stopwatch sw;
  const ModelParams p = point(1.0, 0.0);
  const JumpRecord rec = simulate_record(p, 100000, 42, default_workers());
  const FluxSeries est = bin_jumps(rec, 0.1);
  const ResidualStats st = flux_residual_stats(est, photon_flux_analytic(p, est.times), 3.0);
  const double dist = jump_cdf_distance(rec);
  const double band = dkw_band(100000, 0.01);
  const double t = sw.seconds();
  report(8, "MCWF convergence", st.fraction_within >= 0.95 && dist <= band && t < kLimit,
         str("%.1f%% of %zu bins within 3 sigma (need 95%%), CDF distance %.2e <= DKW99 %.2e, %.2f s (limit %.0f s)",
             100 * st.fraction_within, st.bins, dist, band, t, kLimit));
}

// 9: Parseval and circular Wiener-Khinchin on random signals
void spectral_identities() {
  constexpr double kTol = 1e-10;
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> len(2, 256);
  double worst_parseval = 0.0, worst_wk = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = oracle::random_signal(rng, len(rng));
    const std::size_t n = r.size();
    const SpectrumResult s = dft(r, 1.0);
    double energy = 0.0;
    for (double x : r) energy += x * x;
    worst_parseval = std::max(worst_parseval, std::abs(energy - s.total_power() / n) / energy);
    for (std::size_t k = 0; k < n; ++k) {
      double acc = 0.0;
      for (std::size_t l = 0; l < n; ++l)
        acc += s.power[l] * std::cos(2.0 * std::numbers::pi * static_cast<double>((k * l) % n) / static_cast<double>(n));
      worst_wk = std::max(worst_wk, std::abs(acc / n - oracle::circular_autocorrelation(r, k)) / energy);
    }
  }
  report(9, "spectral identities", worst_parseval <= kTol && worst_wk <= kTol,
         str("Parseval %.1e, Wiener-Khinchin %.1e relative (tol %.0e), 100 signals", worst_parseval, worst_wk, kTol));
}

// 10: byte-identical CLI outputs for repeated runs and different worker counts
std::string digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    std::ifstream in(dir / f, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    all += f.string() + '\n' + os.str();
  }
  return all;
}

bool cli(const fs::path& cwd, const std::string& args) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" NMFLUX_CLI "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) && WEXITSTATUS(status) == 0;
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / "nmflux_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "grid.json") << R"({"v": {"min": 0.05, "max": 2.0, "count": 8},
    "delta": {"min": 0.0, "max": 2.0, "count": 6}, "n_traj": 20000, "master_seed": 11})";
  bool ran = true;
  ran &= cli(dir, "sweep grid.json --out s1 --workers 1");
  ran &= cli(dir, "sweep grid.json --out s2 --workers 1");
  ran &= cli(dir, "sweep grid.json --out s3 --workers 4");
  ran &= cli(dir, "mcwf --v 1 --delta 0 --n-traj 100000 --seed 42 --out m1 --workers 1");
  ran &= cli(dir, "mcwf --v 1 --delta 0 --n-traj 100000 --seed 42 --out m2 --workers 1");
  ran &= cli(dir, "mcwf --v 1 --delta 0 --n-traj 100000 --seed 42 --out m3 --workers 4");
  const bool same = ran && digest(dir / "s1") == digest(dir / "s2") && digest(dir / "s1") == digest(dir / "s3") &&
                    digest(dir / "m1") == digest(dir / "m2") && digest(dir / "m1") == digest(dir / "m3");
  report(10, "determinism", same,
         ran ? "sweep (MCWF cells) and mcwf outputs compared byte for byte, workers 1/1/4"
             : "a CLI run exited with an error");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  oracle_equivalence();
  conservation();
  boundary_reproduction();
  const double om = threshold_reproduction();
  peak_location();
  verdict_table(om);
  no_false_positives(om);
  mcwf_convergence();
  spectral_identities();
  determinism();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
