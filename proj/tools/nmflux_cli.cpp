// nmflux: command-line front end.
//
// Physics flags are read in units of gamma (couplings, detunings, frequencies)
// or 1/gamma (times); --gamma fixes the physical decay rate, and every file
// and report is written in those physical units.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmflux/dynamics.hpp"
#include "nmflux/error.hpp"
#include "nmflux/format.hpp"
#include "nmflux/io.hpp"
#include "nmflux/mcwf.hpp"
#include "nmflux/measure.hpp"
#include "nmflux/parallel.hpp"
#include "nmflux/spectrum.hpp"
#include "nmflux/sweep.hpp"
#include "nmflux/version.hpp"

namespace fs = std::filesystem;
using namespace nmflux;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Raised for bad input found after CLI11 parsing (exit 2 with usage).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelFlags {
  double v = 0.0;
  double delta = 0.0;
  double gamma = 1.0;
  double t_max = kDefaultHorizon;
  double dt = kDefaultStep;
  double c0 = 1.0;
  CLI::Option* v_opt = nullptr;

  ModelParams physical() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidParams("gamma", "must be > 0");
    ModelParams p;
    p.gamma = gamma;
    p.v = v * gamma;
    p.delta = delta * gamma;
    p.t_max = t_max / gamma;
    p.c0_init = {c0, 0.0};
    p.validate();
    if (!(dt > 0.0) || dt > t_max) throw InvalidParams("dt", "must lie in (0, t_max]");
    return p;
  }
  TimeGrid grid() const { return TimeGrid::covering(t_max / gamma, dt / gamma); }
};

void add_model_flags(CLI::App* app, ModelFlags& f, bool with_c0 = true, bool with_dt = true) {
  f.v_opt = app->add_option("--v", f.v, "Atom-pseudomode coupling V / gamma (required)");
  app->add_option("--delta", f.delta, "Detuning delta / gamma")->capture_default_str();
  app->add_option("--gamma", f.gamma, "Pseudomode decay rate; sets the units of all outputs")->capture_default_str();
  app->add_option("--t-max", f.t_max, "Observation time gamma T")->capture_default_str();
  if (with_dt) app->add_option("--dt", f.dt, "Time step gamma dt")->capture_default_str();
  if (with_c0) app->add_option("--c0", f.c0, "Initial excited-state amplitude (real, |c0| <= 1)")->capture_default_str();
}

CLI::Option* add_config_flag(CLI::App* app, std::string& path) {
  return app->add_option("--config", path, "JSON file with option values (flags given on the command line win)");
}

// Fills options not given on the command line from a JSON object whose keys
// are long option names, with '-' or '_' as separator.
void merge_config(CLI::App* app, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file " + path + " must hold a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string name = it.key();
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = app->get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") throw UsageError("config file " + path + ": unknown option '" + it.key() + "'");
    if (opt->count() > 0) continue;
    const auto& val = it.value();
    std::string text;
    if (val.is_string())
      text = val.get<std::string>();
    else if (val.is_boolean())
      text = val.get<bool>() ? "true" : "false";
    else if (val.is_number())
      text = val.dump();
    else
      throw UsageError("config file " + path + ": option '" + it.key() + "' needs a scalar value");
    opt->add_result(text);
    opt->run_callback();
  }
}

void require(const CLI::Option* opt) {
  if (opt->count() == 0) throw UsageError(opt->get_name() + " is required");
}

unsigned resolve_workers(const CLI::Option* flag, unsigned flag_value, std::optional<unsigned> configured = {}) {
  if (flag->count() > 0) {
    if (flag_value == 0) throw InvalidParams("workers", "must be >= 1");
    return flag_value;
  }
  if (const char* env = std::getenv("NM_WORKERS"); env != nullptr && *env != '\0') return default_workers();
  return configured.value_or(default_workers());
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_text_file(path, os.str());
}

std::string fmt(double x) { return fmt_double(x); }

// dynamics ------------------------------------------------------------------

struct DynamicsCmd {
  ModelFlags m;
  std::string out = "dynamics_out";
  std::string method = "analytic";
  std::string config;

  void setup(CLI::App* app) {
    add_model_flags(app, m);
    app->add_option("--out", out, "Output directory")->capture_default_str();
    app->add_option("--method", method, "Closed form or fixed-step RK4")
        ->check(CLI::IsMember({"analytic", "rk4"}))
        ->capture_default_str();
    add_config_flag(app, config);
  }

  int run(CLI::App* app) {
    merge_config(app, config);
    require(m.v_opt);
    const ModelParams p = m.physical();
    const TimeGrid grid = m.grid();
    const AmplitudeSeries s = method == "rk4" ? amplitudes_ode(p, grid) : amplitudes_series(p, grid);
    for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
    const FluxSeries flux = photon_flux_from(s, p.gamma);

    const fs::path dir(out);
    write_file(dir / "population.csv", [&](std::ostream& os) { write_population_csv(os, s); });
    write_file(dir / "flux.csv", [&](std::ostream& os) { write_flux_csv(os, flux); });
    write_file(dir / "amplitudes.csv", [&](std::ostream& os) { write_amplitudes_csv(os, s); });

    // |c|^2 + |b|^2 + emitted = |c0|^2
    std::vector<double> emitted(grid.size, 0.0);
    double worst = 0.0;
    for (std::size_t i = 1; i < grid.size; ++i) {
      emitted[i] = emitted[i - 1] + 0.5 * grid.dt * (flux.values[i] + flux.values[i - 1]);
      worst = std::max(worst, std::abs(s.excitation(i) + emitted[i] - std::norm(p.c0_init)));
    }
    std::string n_text = "n/a";
    std::string nm_text = "n/a";
    if (p.c0_init == cplx{1.0, 0.0}) {
      n_text = fmt(nm_measure(p, grid).n_value);
      nm_text = is_nonmarkovian(p) ? "non-Markovian" : "Markovian";
    }
    double peak = 0.0;
    for (double x : flux.values) peak = std::max(peak, x);
    std::cout << "n_value=" << n_text << " dynamics=" << nm_text << " peak_flux=" << fmt(peak)
              << " emitted=" << fmt(emitted.back()) << " conservation_error=" << fmt(worst) << " out=" << dir.string()
              << '\n';
    return kOk;
  }
};

// mcwf ----------------------------------------------------------------------

struct McwfCmd {
  ModelFlags m;
  std::uint64_t n_traj = 100000;
  std::uint64_t seed = 0;
  double bin = 0.1;
  unsigned workers = 1;
  std::string out = "mcwf_out";
  std::string config;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* workers_opt = nullptr;

  void setup(CLI::App* app) {
    add_model_flags(app, m, true, false);
    app->add_option("--n-traj", n_traj, "Number of trajectories (>= 1)")->capture_default_str();
    seed_opt = app->add_option("--seed", seed, "Master seed (defaults to 0 with a warning)");
    app->add_option("--bin", bin, "Bin width gamma dt_bin for the flux estimate")->capture_default_str();
    workers_opt = app->add_option("--workers", workers, "Worker threads (default: NM_WORKERS or all cores)");
    app->add_option("--out", out, "Output directory")->capture_default_str();
    add_config_flag(app, config);
  }

  int run(CLI::App* app) {
    merge_config(app, config);
    require(m.v_opt);
    if (n_traj < 1) throw InvalidParams("n_traj", "must be >= 1");
    if (seed_opt->count() == 0) std::cerr << "warning: no --seed given, using 0\n";
    const ModelParams p = m.physical();
    const double bin_width = bin / p.gamma;
    if (!(bin_width > 0.0 && bin_width <= p.t_max))
      throw InvalidBinning("bin width " + fmt(bin) + " must lie in (0, t_max]");

    const JumpRecord rec = simulate_record(p, n_traj, seed, resolve_workers(workers_opt, workers));
    const FluxSeries est = bin_jumps(rec, bin_width);
    for (const auto& w : est.warnings) std::cerr << "warning: " << w << '\n';
    const FluxSeries an = photon_flux_analytic(p, est.times);
    const ResidualStats st = flux_residual_stats(est, an, 3.0);

    const fs::path dir(out);
    write_file(dir / "jumps.csv", [&](std::ostream& os) { write_jump_csv(os, rec); });
    write_file(dir / "flux_estimate.csv", [&](std::ostream& os) {
      os << "t,flux,count,analytic\n";
      for (std::size_t k = 0; k < est.times.size(); ++k)
        os << fmt(est.times[k]) << ',' << fmt(est.values[k]) << ',' << est.counts[k] << ',' << fmt(an.values[k]) << '\n';
    });
    write_text_file(dir / "manifest.json", jump_manifest_json(rec, bin_width));

    std::size_t jumps = 0;
    for (const auto& o : rec.outcomes) jumps += o.jump_time.has_value();
    std::cout << "n_traj=" << n_traj << " jumps=" << jumps << " bins=" << st.bins << " rms=" << fmt(st.rms)
              << " max_abs_z=" << fmt(st.max_abs_z) << " within_3sigma=" << fmt(st.fraction_within)
              << " cdf_distance=" << fmt(jump_cdf_distance(rec)) << " dkw99=" << fmt(dkw_band(n_traj, 0.01))
              << " out=" << dir.string() << '\n';
    return kOk;
  }
};

// measure -------------------------------------------------------------------

struct MeasureCmd {
  ModelFlags m;
  DetectionOptions det;
  std::string config;

  void setup(CLI::App* app) {
    add_model_flags(app, m, false);
    app->add_option("--horizon", det.horizon, "Horizon gamma T for the Markovianity test")->capture_default_str();
    app->add_option("--eps", det.eps_n, "Relative revival size counted as non-Markovian")->capture_default_str();
    add_config_flag(app, config);
  }

  int run(CLI::App* app) {
    merge_config(app, config);
    require(m.v_opt);
    const ModelParams p = m.physical();
    if (!(det.horizon > 0.0 && det.eps_n > 0.0)) throw InvalidParams("horizon", "horizon and eps must be > 0");
    const NMResult r = nm_measure(p, m.grid());
    nlohmann::ordered_json j;
    j["n_value"] = r.n_value;
    j["nonmarkovian"] = is_nonmarkovian(p, det);
    j["max_relative_revival"] = r.max_relative_revival;
    j["revival_intervals"] = nlohmann::ordered_json::array();
    for (const auto& iv : r.revival_intervals) j["revival_intervals"].push_back({iv.start, iv.end});
    j["params"] = params_json(p);
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
};

// boundary ------------------------------------------------------------------

struct DomainFlags {
  ParameterDomain dom;
  void add(CLI::App* app, const std::string& prefix) {
    app->add_option("--" + prefix + "v-min", dom.v_min, "Smallest coupling of the Markovian search domain")
        ->capture_default_str();
    app->add_option("--" + prefix + "v-max", dom.v_max, "Largest coupling of the Markovian search domain")
        ->capture_default_str();
    app->add_option("--" + prefix + "delta-min", dom.delta_min, "Smallest detuning of the search domain")
        ->capture_default_str();
    app->add_option("--" + prefix + "delta-max", dom.delta_max, "Largest detuning of the search domain")
        ->capture_default_str();
  }
};

struct BoundaryCmd {
  DomainFlags d;
  std::size_t delta_count = 81;
  double tol = 1e-3;
  unsigned workers = 1;
  std::string out = "boundary.csv";
  std::string config;
  CLI::Option* workers_opt = nullptr;

  void setup(CLI::App* app) {
    d.add(app, "");
    app->add_option("--delta-count", delta_count, "Number of detuning columns")->capture_default_str();
    app->add_option("--tol", tol, "Bisection tolerance on V / gamma")->capture_default_str();
    workers_opt = app->add_option("--workers", workers, "Worker threads (default: NM_WORKERS or all cores)");
    app->add_option("--out", out, "Boundary CSV (delta,v_c)")->capture_default_str();
    add_config_flag(app, config);
  }

  int run(CLI::App* app) {
    merge_config(app, config);
    const auto& dom = d.dom;
    if (delta_count < 1) throw InvalidParams("delta_count", "must be >= 1");
    if (!(dom.delta_max >= dom.delta_min)) throw InvalidParams("delta_max", "must be >= delta_min");
    const BoundaryCurve c = markovian_boundary(linspace(dom.delta_min, dom.delta_max, delta_count), dom.v_min,
                                               dom.v_max, tol, {}, resolve_workers(workers_opt, workers));
    write_file(out, [&](std::ostream& os) { write_boundary_csv(os, c); });
    nlohmann::ordered_json j;
    j["points"] = c.points.size();
    j["unbracketed"] = c.unbracketed;
    j["all_markovian"] = c.all_markovian;
    try {
      const Threshold t = threshold_frequency(c, dom);
      j["threshold"] = {{"omega_m", t.omega_m}, {"v_star", t.v_star}, {"delta_star", t.delta_star}};
    } catch (const EmptyRegion&) {
      j["threshold"] = nullptr;
    }
    j["out"] = out;
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
};

// spectrum ------------------------------------------------------------------

struct SpectrumCmd {
  ModelFlags m;
  std::string window = "none";
  std::string out = "spectrum.csv";
  std::string config;

  void setup(CLI::App* app) {
    add_model_flags(app, m);
    app->add_option("--window", window, "Taper before the transform: none or hann")
        ->check(CLI::IsMember({"none", "hann"}))
        ->capture_default_str();
    app->add_option("--out", out, "Spectrum CSV (omega,power)")->capture_default_str();
    add_config_flag(app, config);
  }

  int run(CLI::App* app) {
    merge_config(app, config);
    require(m.v_opt);
    const ModelParams p = m.physical();
    const TimeGrid grid = m.grid();
    std::vector<double> r = detrend(photon_flux_analytic(p, grid));
    if (window == "hann") apply_hann(r);
    const SpectrumResult s = dft(r, grid.dt);
    write_file(out, [&](std::ostream& os) { write_spectrum_csv(os, s); });
    nlohmann::ordered_json j;
    try {
      const Peak pk = dominant_peak(s);
      j["omega_peak"] = pk.omega;
      j["prominence"] = pk.prominence;
      j["resolved"] = pk.resolved;
    } catch (const NoSignal&) {
      j["omega_peak"] = nullptr;
      j["note"] = "no signal: flux is identically zero";
    }
    j["omega_coherent"] = coherent_frequency(p.v, p.delta);
    j["bin_width"] = s.bin_width();
    j["out"] = out;
    std::cout << j.dump(2) << '\n';
    return kOk;
  }
};

// classify ------------------------------------------------------------------

struct ClassifyCmd {
  ModelFlags m;
  double omega_threshold = 0.0;
  bool auto_threshold = false;
  bool ground_truth = false;
  bool strict = false;
  double min_prominence = ClassifyOptions{}.min_prominence;
  std::string window = "none";
  std::uint64_t n_traj = 0;
  std::uint64_t seed = 0;
  double bin = 0.1;
  DomainFlags d;
  std::string config;
  CLI::Option* threshold_opt = nullptr;
  CLI::Option* auto_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void setup(CLI::App* app) {
    add_model_flags(app, m);
    threshold_opt = app->add_option("--omega-threshold", omega_threshold, "Threshold frequency Omega_M / gamma");
    auto_opt = app->add_flag("--auto-threshold", auto_threshold,
                             "Compute Omega_M from the Markovian boundary over the domain flags");
    d.add(app, "domain-");
    app->add_flag("--ground-truth", ground_truth, "Also test the atom dynamics and refine the label");
    app->add_flag("--strict", strict, "Exit 1 when the flux carries no signal");
    app->add_option("--min-prominence", min_prominence, "Smallest peak-bin share of the spectral power")
        ->capture_default_str();
    app->add_option("--window", window, "Taper before the transform: none or hann")
        ->check(CLI::IsMember({"none", "hann"}))
        ->capture_default_str();
    app->add_option("--n-traj", n_traj, "Classify a trajectory estimate with this many runs (0: analytic flux)")
        ->capture_default_str();
    seed_opt = app->add_option("--seed", seed, "Master seed for the trajectory estimate");
    app->add_option("--bin", bin, "Bin width gamma dt_bin for the trajectory estimate")->capture_default_str();
    add_config_flag(app, config);
  }

  int run(CLI::App* app) {
    merge_config(app, config);
    require(m.v_opt);
    const bool given = threshold_opt->count() > 0;
    if (given == auto_threshold) throw UsageError("give exactly one of --omega-threshold and --auto-threshold");
    const ModelParams p = m.physical();

    double om = omega_threshold;
    if (auto_threshold) {
      const auto& dom = d.dom;
      const BoundaryCurve c = markovian_boundary(linspace(dom.delta_min, dom.delta_max, 81), dom.v_min, dom.v_max,
                                                 1e-3, {}, default_workers());
      om = threshold_frequency(c, dom).omega_m;
    }
    if (!(om >= 0.0)) throw InvalidParams("omega_threshold", "must be >= 0");

    ClassifyOptions opt;
    opt.min_prominence = min_prominence;
    opt.dt = m.dt;
    opt.ground_truth = ground_truth;
    opt.hann_window = window == "hann";
    RegionVerdict v;
    if (n_traj > 0) {
      if (seed_opt->count() == 0) std::cerr << "warning: no --seed given, using 0\n";
      const FluxSeries est = estimate_flux(p, n_traj, bin / p.gamma, seed, default_workers());
      v = classify_flux(est, p, om * p.gamma, opt);
    } else {
      v = classify(p, om * p.gamma, opt);
    }
    std::cout << verdict_json(v) << '\n';
    if (v.no_signal && strict) {
      std::cerr << "error: NoSignal: flux is identically zero\n";
      return kFailure;
    }
    return kOk;
  }
};

// sweep ---------------------------------------------------------------------

struct SweepCmd {
  std::string config_path;
  std::string out;
  unsigned workers = 1;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* out_opt = nullptr;

  void setup(CLI::App* app) {
    app->add_option("config", config_path, "Sweep configuration (JSON)")->required();
    out_opt = app->add_option("--out", out, "Output directory (overrides output_dir in the config)");
    workers_opt = app->add_option("--workers", workers, "Worker threads (overrides NM_WORKERS and the config)");
  }

  int run(CLI::App*) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot read config file " + config_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file " + config_path + ": " + e.what());
    }
    SweepConfig cfg;
    try {
      cfg = SweepConfig::from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file " + config_path + ": " + e.what());
    }
    if (out_opt->count() > 0) cfg.output_dir = out;
    std::optional<unsigned> configured;
    if (j.contains("workers")) configured = cfg.workers;
    cfg.workers = resolve_workers(workers_opt, workers, configured);

    const RegionMap map = run_sweep(cfg);
    write_sweep(map, cfg.output_dir);
    std::size_t detected = 0;
    for (const auto& c : map.cells) detected += c.verdict == Verdict::NonMarkovianDetected && c.error.empty();
    std::cout << "cells=" << map.cells.size() << " failed=" << map.failures()
              << " omega_m=" << fmt(map.threshold.omega_m) << " detected=" << detected
              << " out=" << cfg.output_dir.string() << '\n';
    return map.failures() == 0 ? kOk : kFailure;
  }
};

// figures -------------------------------------------------------------------

struct FiguresCmd {
  int id = 0;
  std::string out = "figures";
  unsigned workers = 1;
  CLI::Option* workers_opt = nullptr;

  void setup(CLI::App* app) {
    app->add_option("id", id, "Figure number (1-4)")->required();
    app->add_option("--out", out, "Output directory")->capture_default_str();
    workers_opt = app->add_option("--workers", workers, "Worker threads (default: NM_WORKERS or all cores)");
  }

  int run(CLI::App*) {
    const auto files = figure_datasets(id, out, resolve_workers(workers_opt, workers));
    for (const auto& f : files) std::cout << f.string() << '\n';
    return kOk;
  }
};

int usage_error(const CLI::App& app, const std::string& what) {
  std::cerr << "error: " << what << "\n\n" << app.help();
  return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-flux diagnostics for an atom coupled to a damped pseudomode", "nmflux"};
  app.set_version_flag("--version", std::string(kEngineVersion));
  app.require_subcommand(1);
  app.get_formatter()->column_width(44);

  DynamicsCmd dynamics;
  McwfCmd mcwf;
  MeasureCmd measure;
  BoundaryCmd boundary;
  SpectrumCmd spectrum;
  ClassifyCmd classify_cmd;
  SweepCmd sweep;
  FiguresCmd figures;

  std::map<CLI::App*, std::function<int(CLI::App*)>> runners;
  auto add = [&](const char* name, const char* about, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, about);
    cmd.setup(sub);
    runners[sub] = [&cmd](CLI::App* a) { return cmd.run(a); };
  };
  add("dynamics", "Atom population and photon flux curves", dynamics);
  add("mcwf", "Monte Carlo emission record and binned flux estimate", mcwf);
  add("measure", "Non-Markovianity measure of the atom dynamics", measure);
  add("boundary", "Markovian boundary V_c(delta) and threshold frequency", boundary);
  add("spectrum", "Power spectrum of the detrended photon flux", spectrum);
  add("classify", "Spectral non-Markovianity verdict for one parameter point", classify_cmd);
  add("sweep", "Parameter sweep over a (V, delta) grid", sweep);
  add("figures", "Data sets behind the reference figures", figures);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    return usage_error(*sub, e.what());
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    return runners.at(sub)(sub);
  } catch (const UsageError& e) {
    return usage_error(*sub, e.what());
  } catch (const InvalidParams& e) {
    return usage_error(*sub, std::string("invalid ") + e.what());
  } catch (const InvalidBinning& e) {
    return usage_error(*sub, std::string("InvalidBinning: ") + e.what());
  } catch (const UnknownFigure& e) {
    return usage_error(*sub, std::string("UnknownFigure: ") + e.what());
  } catch (const CLI::ParseError& e) {
    return usage_error(*sub, e.what());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}
