#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nmflux/measure.hpp"
#include "nmflux/spectrum.hpp"

namespace nmflux {

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 1;
  std::vector<double> values() const { return linspace(min, max, count); }
};

/// Everything a sweep depends on. Physical values in units of gamma.
struct SweepConfig {
  GridSpec v{0.05, 1.2, 200};
  GridSpec delta{0.0, 2.0, 200};
  double gamma = 1.0;
  double t_max = kDefaultHorizon;
  double dt = 1e-2;
  std::uint64_t n_traj = 0;  ///< > 0 classifies MCWF estimates instead of the analytic flux
  std::optional<std::uint64_t> master_seed;
  double bin_width = 0.1;
  std::optional<double> omega_threshold;  ///< computed from the Markovian cells when absent
  double min_prominence = ClassifyOptions{}.min_prominence;
  DetectionOptions detection{};
  std::filesystem::path output_dir = "sweep_out";
  unsigned workers = 1;

  void validate() const;
  static SweepConfig from_json(const nlohmann::json& j);
  /// Inputs that determine the results (no output path, no worker count).
  nlohmann::ordered_json to_json() const;
};

struct Cell {
  double delta = 0.0;
  double v = 0.0;
  double n_value = 0.0;
  double omega = 0.0;
  double omega_peak = 0.0;
  double prominence = 0.0;
  bool peak_resolved = false;
  bool nonmarkovian = false;
  Verdict verdict = Verdict::MarkovianConsistent;
  std::string error;  ///< empty on success
};

/// Cells are stored row-major: index = i_delta * v_values.size() + i_v.
struct RegionMap {
  std::vector<double> delta_values;
  std::vector<double> v_values;
  std::vector<Cell> cells;
  Threshold threshold;
  bool threshold_from_grid = false;
  /// Largest prominent resolved peak among Markovian cells; a grid-derived
  /// threshold is raised to it so that no Markovian cell of the map is
  /// reported as detected.
  double markovian_peak_max = 0.0;
  nlohmann::ordered_json manifest;

  const Cell& at(std::size_t i_delta, std::size_t i_v) const { return cells[i_delta * v_values.size() + i_v]; }
  std::size_t failures() const;
};

/// Evaluates every grid point (measure, Omega, verdict). Without a configured
/// threshold, Omega_M is the largest Omega over the Markovian cells (or the
/// largest prominent resolved Markovian peak, if higher). Results do not
/// depend on the worker count; a failing cell records its error and the
/// sweep carries on.
RegionMap run_sweep(const SweepConfig& config);

/// manifest.json, cells.csv and (if any cell failed) errors.csv.
void write_sweep(const RegionMap& map, const std::filesystem::path& dir);
std::string cells_csv(const RegionMap& map);

/// Writes the data behind figure 1..4 under dir/fig<id>/ and returns the
/// files created. Throws UnknownFigure for other ids.
std::vector<std::filesystem::path> figure_datasets(int figure_id, const std::filesystem::path& dir,
                                                   unsigned workers = 1);

}  // namespace nmflux
