#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nmflux/dynamics.hpp"
#include "nmflux/error.hpp"
#include "nmflux/format.hpp"
#include "nmflux/io.hpp"
#include "nmflux/measure.hpp"
#include "nmflux/parallel.hpp"
#include "nmflux/spectrum.hpp"
#include "nmflux/sweep.hpp"

namespace nmflux {

namespace {

namespace fs = std::filesystem;

std::string tag(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

template <class Writer>
fs::path emit(std::vector<fs::path>& files, const fs::path& path, Writer&& writer) {
  std::ostringstream os;
  writer(os);
  write_text_file(path, os.str());
  files.push_back(path);
  return path;
}

ModelParams point(double v, double delta) {
  ModelParams p;
  p.v = v;
  p.delta = delta;
  p.t_max = kDefaultHorizon;
  return p;
}

constexpr double kFig3DeltaMax = 2.0;

Threshold fig3_threshold(const BoundaryCurve& curve) { return threshold_frequency(curve, ParameterDomain{}); }

BoundaryCurve fig3_boundary(unsigned workers) {
  const auto deltas = linspace(0.0, kFig3DeltaMax, 81);
  const ParameterDomain dom;
  return markovian_boundary(deltas, dom.v_min, dom.v_max, 1e-3, {}, workers);
}

void figure1(const fs::path& dir, std::vector<fs::path>& files) {
  const TimeGrid grid = TimeGrid::covering(kDefaultHorizon, kDefaultStep);
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (double delta : {0.0, 1.0}) {
    for (double v : {0.2, 0.5, 1.0}) {
      const ModelParams p = point(v, delta);
      const AmplitudeSeries amps = amplitudes_series(p, grid);
      const FluxSeries flux = photon_flux_from(amps, p.gamma);
      const std::string stem = "v" + tag(v) + "_delta" + tag(delta);
      emit(files, dir / ("population_" + stem + ".csv"), [&](std::ostream& os) { write_population_csv(os, amps); });
      emit(files, dir / ("flux_" + stem + ".csv"), [&](std::ostream& os) { write_flux_csv(os, flux); });
      summary.push_back({{"v", v},
                         {"delta", delta},
                         {"n_value", nm_measure(p, grid).n_value},
                         {"nonmarkovian", is_nonmarkovian(p)},
                         {"peak_flux", *std::max_element(flux.values.begin(), flux.values.end())}});
    }
  }
  emit(files, dir / "summary.json", [&](std::ostream& os) { os << summary.dump(2) << '\n'; });
}

void figure2(const fs::path& dir, std::vector<fs::path>& files) {
  // skip t = 0, where both derivatives vanish identically
  const auto times = linspace(0.05, kDefaultHorizon, 280);
  const auto deltas = linspace(0.0, 4.0, 161);
  const auto couplings = linspace(0.0, 2.0, 161);
  const SignMap top = sign_map(SignAxis::Detuning, 1.0, times, deltas);
  const SignMap bottom = sign_map(SignAxis::Coupling, 1.0, times, couplings);
  emit(files, dir / "signmap_t_delta_v1.csv", [&](std::ostream& os) { write_sign_map_csv(os, top); });
  emit(files, dir / "signmap_t_v_delta1.csv", [&](std::ostream& os) { write_sign_map_csv(os, bottom); });
}

void figure3(const fs::path& dir, std::vector<fs::path>& files, unsigned workers) {
  const BoundaryCurve curve = fig3_boundary(workers);
  const Threshold th = fig3_threshold(curve);
  emit(files, dir / "boundary.csv", [&](std::ostream& os) { write_boundary_csv(os, curve); });

  const ParameterDomain dom;
  const auto deltas = linspace(dom.delta_min, dom.delta_max, 101);
  const auto couplings = linspace(dom.v_min, dom.v_max, 101);
  std::vector<std::uint8_t> nm(deltas.size() * couplings.size());
  parallel_for(nm.size(), workers, [&](std::size_t i) {
    nm[i] = is_nonmarkovian(couplings[i % couplings.size()], deltas[i / couplings.size()]);
  });
  emit(files, dir / "omega_map.csv", [&](std::ostream& os) {
    os << "delta,v,omega,nonmarkovian\n";
    for (std::size_t i = 0; i < nm.size(); ++i) {
      const double delta = deltas[i / couplings.size()], v = couplings[i % couplings.size()];
      os << fmt_double(delta) << ',' << fmt_double(v) << ',' << fmt_double(coherent_frequency(v, delta)) << ','
         << int(nm[i]) << '\n';
    }
  });
  emit(files, dir / "threshold_contour.csv", [&](std::ostream& os) {
    os << "delta,v\n";
    for (double delta : linspace(0.0, th.omega_m, 101)) {
      const double v = 0.5 * std::sqrt(std::max(0.0, th.omega_m * th.omega_m - delta * delta));
      os << fmt_double(delta) << ',' << fmt_double(v) << '\n';
    }
  });
  emit(files, dir / "threshold.json", [&](std::ostream& os) {
    nlohmann::ordered_json j{{"omega_m", th.omega_m}, {"v_star", th.v_star}, {"delta_star", th.delta_star}};
    os << j.dump(2) << '\n';
  });
}

void figure4(const fs::path& dir, std::vector<fs::path>& files, unsigned workers) {
  const Threshold th = fig3_threshold(fig3_boundary(workers));
  ClassifyOptions opt;
  opt.ground_truth = true;
  nlohmann::ordered_json verdicts = nlohmann::ordered_json::array();
  const TimeGrid grid = TimeGrid::covering(kDefaultHorizon, kDefaultStep);
  for (auto [delta, v] : {std::pair{2.0, 2.0}, {0.0, 0.9}, {1.0, 0.7}, {1.7, 0.3}}) {
    const ModelParams p = point(v, delta);
    const SpectrumResult s = dft(detrend(photon_flux_analytic(p, grid)), grid.dt);
    emit(files, dir / ("spectrum_delta" + tag(delta) + "_v" + tag(v) + ".csv"),
         [&](std::ostream& os) { write_spectrum_csv(os, s); });
    const RegionVerdict rv = classify(p, th.omega_m, opt);
    verdicts.push_back(nlohmann::ordered_json::parse(verdict_json(rv)));
  }
  emit(files, dir / "verdicts.json", [&](std::ostream& os) { os << verdicts.dump(2) << '\n'; });
}

const char* kPlotScript = R"(#!/usr/bin/env python3
"""Quick-look plots for the CSV files in this directory tree."""
import glob
import os
import sys

import matplotlib.pyplot as plt
import pandas as pd

root = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))

for path in sorted(glob.glob(os.path.join(root, "fig1", "*.csv"))):
    df = pd.read_csv(path)
    plt.figure("fig1-" + os.path.basename(path).split("_")[0])
    plt.plot(df.iloc[:, 0], df.iloc[:, 1], label=os.path.basename(path)[:-4])
    plt.xlabel("gamma t")
    plt.legend()

for path in sorted(glob.glob(os.path.join(root, "fig2", "*.csv"))):
    df = pd.read_csv(path)
    axis = df.columns[1]
    plt.figure("fig2-" + axis)
    plt.scatter(df.t[df.c_pos == 1], df[axis][df.c_pos == 1], s=1, c="darkred")
    plt.scatter(df.t[df.b_pos == 1], df[axis][df.b_pos == 1], s=1, c="orange", alpha=0.3)
    plt.xlabel("gamma t")
    plt.ylabel(axis)

fig3 = os.path.join(root, "fig3")
if os.path.isdir(fig3):
    m = pd.read_csv(os.path.join(fig3, "omega_map.csv"))
    b = pd.read_csv(os.path.join(fig3, "boundary.csv"))
    c = pd.read_csv(os.path.join(fig3, "threshold_contour.csv"))
    plt.figure("fig3")
    plt.tricontourf(m.v, m.delta, m.omega, 50)
    plt.plot(b.v_c, b.delta, "k-")
    plt.plot(c.v, c.delta, "k:")
    plt.xlabel("V / gamma")
    plt.ylabel("delta / gamma")

for path in sorted(glob.glob(os.path.join(root, "fig4", "spectrum_*.csv"))):
    df = pd.read_csv(path)
    plt.figure("fig4")
    plt.semilogy(df.omega, df.power + 1e-300, label=os.path.basename(path)[9:-4])
    plt.xlim(0, 8)
    plt.xlabel("omega / gamma")
    plt.legend()

plt.show()
)";

}  // namespace

std::vector<fs::path> figure_datasets(int figure_id, const fs::path& dir, unsigned workers) {
  std::vector<fs::path> files;
  const fs::path sub = dir / ("fig" + std::to_string(figure_id));
  switch (figure_id) {
    case 1: figure1(sub, files); break;
    case 2: figure2(sub, files); break;
    case 3: figure3(sub, files, workers); break;
    case 4: figure4(sub, files, workers); break;
    default: throw UnknownFigure("unknown figure " + std::to_string(figure_id) + " (expected 1-4)");
  }
  emit(files, dir / "plot_figures.py", [](std::ostream& os) { os << kPlotScript; });
  return files;
}

}  // namespace nmflux
