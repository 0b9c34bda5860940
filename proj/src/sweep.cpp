#include "nmflux/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "nmflux/error.hpp"
#include "nmflux/format.hpp"
#include "nmflux/io.hpp"
#include "nmflux/mcwf.hpp"
#include "nmflux/parallel.hpp"
#include "nmflux/version.hpp"

namespace nmflux {

namespace {

void check_grid(const GridSpec& g, const char* name) {
  if (g.count < 1) throw InvalidParams(name, "grid needs at least one point");
  if (!std::isfinite(g.min) || !std::isfinite(g.max) || g.max < g.min)
    throw InvalidParams(name, "grid must satisfy min <= max");
  if (g.count > 1 && g.max == g.min) throw InvalidParams(name, "grid with several points needs min < max");
}

GridSpec grid_from_json(const nlohmann::json& j, GridSpec g) {
  g.min = j.value("min", g.min);
  g.max = j.value("max", g.max);
  g.count = j.value("count", g.count);
  return g;
}

nlohmann::ordered_json grid_json(const GridSpec& g) { return {{"min", g.min}, {"max", g.max}, {"count", g.count}}; }

}  // namespace

void SweepConfig::validate() const {
  check_grid(v, "v");
  check_grid(delta, "delta");
  if (v.min < 0.0) throw InvalidParams("v", "couplings must be >= 0");
  if (!(gamma > 0.0)) throw InvalidParams("gamma", "must be > 0");
  if (!(t_max > 0.0)) throw InvalidParams("t_max", "must be > 0");
  if (!(dt > 0.0) || dt > t_max / 2) throw InvalidParams("dt", "must lie in (0, t_max/2]");
  if (n_traj > 0 && !master_seed) throw InvalidParams("master_seed", "required when n_traj > 0");
  if (n_traj > 0 && !(bin_width > 0.0 && bin_width <= t_max)) throw InvalidParams("bin_width", "must lie in (0, t_max]");
  if (!(min_prominence >= 0.0)) throw InvalidParams("min_prominence", "must be >= 0");
  if (!(detection.horizon > 0.0 && detection.dt > 0.0 && detection.eps_n > 0.0))
    throw InvalidParams("detection", "horizon, dt and eps_n must be > 0");
}

SweepConfig SweepConfig::from_json(const nlohmann::json& j) {
  SweepConfig c;
  if (j.contains("v")) c.v = grid_from_json(j.at("v"), c.v);
  if (j.contains("delta")) c.delta = grid_from_json(j.at("delta"), c.delta);
  c.gamma = j.value("gamma", c.gamma);
  c.t_max = j.value("t_max", c.t_max);
  c.dt = j.value("dt", c.dt);
  c.n_traj = j.value("n_traj", c.n_traj);
  if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.bin_width = j.value("bin_width", c.bin_width);
  if (j.contains("omega_threshold") && !j.at("omega_threshold").is_null())
    c.omega_threshold = j.at("omega_threshold").get<double>();
  c.min_prominence = j.value("min_prominence", c.min_prominence);
  if (j.contains("detection")) {
    const auto& d = j.at("detection");
    c.detection.horizon = d.value("horizon", c.detection.horizon);
    c.detection.dt = d.value("dt", c.detection.dt);
    c.detection.eps_n = d.value("eps_n", c.detection.eps_n);
  }
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  c.workers = j.value("workers", c.workers);
  return c;
}

nlohmann::ordered_json SweepConfig::to_json() const {
  nlohmann::ordered_json j;
  j["v"] = grid_json(v);
  j["delta"] = grid_json(delta);
  j["gamma"] = gamma;
  j["t_max"] = t_max;
  j["dt"] = dt;
  j["n_traj"] = n_traj;
  j["master_seed"] = master_seed ? nlohmann::ordered_json(*master_seed) : nlohmann::ordered_json(nullptr);
  j["bin_width"] = bin_width;
  j["omega_threshold"] = omega_threshold ? nlohmann::ordered_json(*omega_threshold) : nlohmann::ordered_json(nullptr);
  j["min_prominence"] = min_prominence;
  j["detection"] = {{"horizon", detection.horizon}, {"dt", detection.dt}, {"eps_n", detection.eps_n}};
  return j;
}

std::size_t RegionMap::failures() const {
  std::size_t n = 0;
  for (const auto& c : cells) n += !c.error.empty();
  return n;
}

RegionMap run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  RegionMap map;
  map.delta_values = cfg.delta.values();
  map.v_values = cfg.v.values();
  const std::size_t nv = map.v_values.size();
  map.cells.resize(map.delta_values.size() * nv);

  auto params_of = [&](const Cell& cell) {
    ModelParams p;
    p.gamma = cfg.gamma;
    p.v = cell.v * cfg.gamma;
    p.delta = cell.delta * cfg.gamma;
    p.t_max = cfg.t_max / cfg.gamma;
    return p;
  };

  ClassifyOptions copt;
  copt.min_prominence = cfg.min_prominence;
  copt.dt = cfg.dt;
  const double inf = std::numeric_limits<double>::infinity();

  // phase 1: ground truth, measure and spectral peak of every cell
  parallel_for(map.cells.size(), cfg.workers, [&](std::size_t idx) {
    Cell& cell = map.cells[idx];
    cell.delta = map.delta_values[idx / nv];
    cell.v = map.v_values[idx % nv];
    cell.omega = coherent_frequency(cell.v, cell.delta);
    try {
      const ModelParams p = params_of(cell);
      cell.n_value = nm_measure(p, TimeGrid::covering(p.t_max, cfg.dt / cfg.gamma)).n_value;
      cell.nonmarkovian = is_nonmarkovian(p, cfg.detection);
      RegionVerdict rv;
      if (cfg.n_traj > 0) {
        const FluxSeries est = estimate_flux(p, cfg.n_traj, cfg.bin_width / cfg.gamma,
                                             trajectory_seed(*cfg.master_seed, idx), 1);
        rv = classify_flux(est, p, inf, copt);
      } else {
        rv = classify(p, inf, copt);
      }
      cell.omega_peak = rv.omega_peak / cfg.gamma;
      cell.prominence = rv.prominence;
      cell.peak_resolved = rv.peak_resolved;
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });

  for (const auto& cell : map.cells) {
    if (!cell.error.empty() || cell.nonmarkovian) continue;
    if (cell.peak_resolved && cell.prominence >= cfg.min_prominence)
      map.markovian_peak_max = std::max(map.markovian_peak_max, cell.omega_peak);
  }
  if (cfg.omega_threshold) {
    map.threshold.omega_m = *cfg.omega_threshold;
  } else {
    bool found = false;
    for (const auto& cell : map.cells) {
      if (!cell.error.empty() || cell.nonmarkovian) continue;
      if (!found || cell.omega > map.threshold.omega_m) map.threshold = {cell.omega, cell.v, cell.delta};
      found = true;
    }
    if (!found) throw EmptyRegion("sweep grid holds no Markovian cell to set the threshold frequency");
    map.threshold_from_grid = true;
  }
  const double omega_m = map.threshold_from_grid ? std::max(map.threshold.omega_m, map.markovian_peak_max)
                                                 : map.threshold.omega_m;

  // phase 2: verdicts
  for (auto& cell : map.cells) {
    if (!cell.error.empty()) continue;
    const bool detected = cell.peak_resolved && cell.omega_peak > omega_m && cell.prominence >= cfg.min_prominence;
    if (detected)
      cell.verdict = Verdict::NonMarkovianDetected;
    else
      cell.verdict = cell.nonmarkovian ? Verdict::NonMarkovianUndetectable : Verdict::Markovian;
  }

  auto& m = map.manifest;
  m["engine_version"] = kEngineVersion;
  m["config"] = cfg.to_json();
  m["threshold"] = {{"omega_m", map.threshold.omega_m},
                    {"v_star", map.threshold.v_star},
                    {"delta_star", map.threshold.delta_star},
                    {"source", map.threshold_from_grid ? "grid" : "config"},
                    {"markovian_peak_max", map.markovian_peak_max},
                    {"omega_m_applied", omega_m}};
  m["cells"] = map.cells.size();
  m["failed_cells"] = map.failures();
  return map;
}

std::string cells_csv(const RegionMap& map) {
  std::ostringstream os;
  os << "delta,v,n_value,omega,omega_peak,prominence,verdict\n";
  for (const auto& c : map.cells) {
    os << fmt_double(c.delta) << ',' << fmt_double(c.v) << ',' << fmt_double(c.n_value) << ',' << fmt_double(c.omega)
       << ',' << fmt_double(c.omega_peak) << ',' << fmt_double(c.prominence) << ','
       << (c.error.empty() ? to_string(c.verdict) : "Error") << '\n';
  }
  return os.str();
}

void write_sweep(const RegionMap& map, const std::filesystem::path& dir) {
  write_text_file(dir / "manifest.json", map.manifest.dump(2) + "\n");
  write_text_file(dir / "cells.csv", cells_csv(map));
  if (map.failures() > 0) {
    std::ostringstream os;
    os << "delta,v,error\n";
    for (const auto& c : map.cells)
      if (!c.error.empty()) os << fmt_double(c.delta) << ',' << fmt_double(c.v) << ",\"" << c.error << "\"\n";
    write_text_file(dir / "errors.csv", os.str());
  }
}

}  // namespace nmflux
