#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nmflux/dynamics.hpp"
#include "nmflux/error.hpp"
#include "nmflux/mcwf.hpp"
#include "nmflux/measure.hpp"
#include "nmflux/spectrum.hpp"
#include "nmflux/sweep.hpp"
#include "nmflux/version.hpp"

namespace py = pybind11;
using namespace nmflux;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
  return py::array_t<T>(static_cast<py::ssize_t>(v.size()), v.data());
}

ModelParams make_params(double v, double delta, double gamma, double t_max, cplx c0) {
  ModelParams p;
  p.gamma = gamma;
  p.v = v;
  p.delta = delta;
  p.t_max = t_max;
  p.c0_init = c0;
  p.validate();
  return p;
}

py::dict flux_dict(const FluxSeries& f) {
  py::dict d;
  d["t"] = to_array(f.times);
  d["flux"] = to_array(f.values);
  if (f.kind == FluxKind::McwfEstimate) {
    d["count"] = to_array(f.counts);
    d["warnings"] = f.warnings;
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_nmflux, m) {
  m.attr("__version__") = kEngineVersion;

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidParams>(m, "InvalidParams", base.ptr());
  py::register_exception<InvalidBinning>(m, "InvalidBinning", base.ptr());
  py::register_exception<GridMismatch>(m, "GridMismatch", base.ptr());
  py::register_exception<UnsupportedInitialState>(m, "UnsupportedInitialState", base.ptr());
  py::register_exception<EmptyRegion>(m, "EmptyRegion", base.ptr());
  py::register_exception<NoSignal>(m, "NoSignal", base.ptr());
  py::register_exception<UnknownFigure>(m, "UnknownFigure", base.ptr());

  py::enum_<Verdict>(m, "Verdict")
      .value("Markovian", Verdict::Markovian)
      .value("NonMarkovianUndetectable", Verdict::NonMarkovianUndetectable)
      .value("NonMarkovianDetected", Verdict::NonMarkovianDetected)
      .value("MarkovianConsistent", Verdict::MarkovianConsistent);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init(&make_params), py::arg("v"), py::arg("delta"), py::arg("gamma") = 1.0,
           py::arg("t_max") = kDefaultHorizon, py::arg("c0") = cplx{1.0, 0.0})
      .def_readonly("v", &ModelParams::v)
      .def_readonly("delta", &ModelParams::delta)
      .def_readonly("gamma", &ModelParams::gamma)
      .def_readonly("t_max", &ModelParams::t_max)
      .def_readonly("c0", &ModelParams::c0_init)
      .def("__repr__", [](const ModelParams& p) {
        return "ModelParams(v=" + std::to_string(p.v) + ", delta=" + std::to_string(p.delta) +
               ", gamma=" + std::to_string(p.gamma) + ", t_max=" + std::to_string(p.t_max) + ")";
      });

  m.def("splitting", py::overload_cast<double, double, double>(&splitting), py::arg("gamma"), py::arg("v"),
        py::arg("delta"));

  m.def(
      "amplitudes",
      [](const ModelParams& p, double dt) {
        const TimeGrid grid = TimeGrid::covering(p.t_max, dt);
        const AmplitudeSeries s = amplitudes_series(p, grid);
        std::vector<double> t(grid.size);
        for (std::size_t i = 0; i < grid.size; ++i) t[i] = grid[i];
        py::dict d;
        d["t"] = to_array(t);
        d["c"] = to_array(s.c);
        d["b"] = to_array(s.b);
        return d;
      },
      py::arg("params"), py::arg("dt") = kDefaultStep, "Closed-form amplitudes c(t), b(t) on a uniform grid.");

  m.def(
      "photon_flux",
      [](const ModelParams& p, double dt) { return flux_dict(photon_flux_analytic(p, TimeGrid::covering(p.t_max, dt))); },
      py::arg("params"), py::arg("dt") = kDefaultStep);

  m.def(
      "estimate_flux",
      [](const ModelParams& p, std::uint64_t n_traj, std::uint64_t seed, double bin_width, unsigned workers) {
        py::gil_scoped_release release;
        FluxSeries f = estimate_flux(p, n_traj, bin_width, seed, workers);
        py::gil_scoped_acquire acquire;
        return flux_dict(f);
      },
      py::arg("params"), py::arg("n_traj"), py::arg("seed"), py::arg("bin_width") = 0.1, py::arg("workers") = 1,
      "Binned photon flux from quantum-jump trajectories.");

  m.def(
      "jump_times",
      [](const ModelParams& p, std::uint64_t n_traj, std::uint64_t seed, unsigned workers) {
        JumpRecord rec;
        {
          py::gil_scoped_release release;
          rec = simulate_record(p, n_traj, seed, workers);
        }
        std::vector<double> t;
        for (const auto& o : rec.outcomes) t.push_back(o.jump_time.value_or(std::numeric_limits<double>::quiet_NaN()));
        return to_array(t);
      },
      py::arg("params"), py::arg("n_traj"), py::arg("seed"), py::arg("workers") = 1,
      "Jump time per trajectory, NaN where no photon is emitted.");

  m.def(
      "nm_measure",
      [](const ModelParams& p, double dt) {
        const NMResult r = nm_measure(p, TimeGrid::covering(p.t_max, dt));
        std::vector<std::pair<double, double>> intervals;
        for (const auto& iv : r.revival_intervals) intervals.emplace_back(iv.start, iv.end);
        py::dict d;
        d["n_value"] = r.n_value;
        d["max_relative_revival"] = r.max_relative_revival;
        d["revival_intervals"] = intervals;
        return d;
      },
      py::arg("params"), py::arg("dt") = kDefaultStep);

  m.def(
      "is_nonmarkovian", [](double v, double delta) { return is_nonmarkovian(v, delta); }, py::arg("v"),
      py::arg("delta"), "Ground-truth revival test, V and delta in units of gamma.");

  m.def(
      "boundary",
      [](const std::vector<double>& deltas, double v_lo, double v_hi, double tol_v, unsigned workers) {
        BoundaryCurve c;
        {
          py::gil_scoped_release release;
          c = markovian_boundary(deltas, v_lo, v_hi, tol_v, {}, workers);
        }
        std::vector<double> d, vc;
        for (const auto& p : c.points) d.push_back(p.delta), vc.push_back(p.v_c());
        py::dict out;
        out["delta"] = to_array(d);
        out["v_c"] = to_array(vc);
        out["unbracketed"] = c.unbracketed;
        return out;
      },
      py::arg("deltas"), py::arg("v_lo") = 0.05, py::arg("v_hi") = 1.2, py::arg("tol_v") = 1e-3,
      py::arg("workers") = 1);

  m.def("coherent_frequency", &coherent_frequency, py::arg("v"), py::arg("delta"));

  m.def(
      "spectrum",
      [](const ModelParams& p, double dt, bool hann) {
        std::vector<double> r = detrend(photon_flux_analytic(p, TimeGrid::covering(p.t_max, dt)));
        if (hann) apply_hann(r);
        const SpectrumResult s = dft(r, dt);
        std::vector<double> omega(s.power.size());
        for (std::size_t k = 0; k < omega.size(); ++k) omega[k] = static_cast<double>(k) * s.bin_width();
        const Peak pk = dominant_peak(s);
        py::dict d;
        d["omega"] = to_array(omega);
        d["power"] = to_array(s.power);
        d["peak_omega"] = pk.omega;
        d["prominence"] = pk.prominence;
        d["peak_resolved"] = pk.resolved;
        return d;
      },
      py::arg("params"), py::arg("dt") = kDefaultStep, py::arg("hann") = false,
      "Power spectrum of the detrended analytic flux and its dominant peak.");

  m.def(
      "classify",
      [](const ModelParams& p, double omega_threshold, double min_prominence, bool ground_truth, bool hann) {
        ClassifyOptions opt;
        opt.min_prominence = min_prominence;
        opt.ground_truth = ground_truth;
        opt.hann_window = hann;
        const RegionVerdict v = classify(p, omega_threshold, opt);
        py::dict d;
        d["label"] = v.label;
        d["omega_peak"] = v.omega_peak;
        d["omega_threshold"] = v.omega_threshold;
        d["prominence"] = v.prominence;
        d["peak_resolved"] = v.peak_resolved;
        d["no_signal"] = v.no_signal;
        d["ground_truth_nonmarkovian"] = v.ground_truth_nonmarkovian;
        return d;
      },
      py::arg("params"), py::arg("omega_threshold"), py::arg("min_prominence") = ClassifyOptions{}.min_prominence,
      py::arg("ground_truth") = false, py::arg("hann") = false);

  m.def(
      "sweep",
      [](const std::string& config_json, std::optional<std::string> out_dir, unsigned workers) {
        SweepConfig cfg = SweepConfig::from_json(nlohmann::json::parse(config_json));
        cfg.workers = workers;
        RegionMap map;
        {
          py::gil_scoped_release release;
          map = run_sweep(cfg);
          if (out_dir) write_sweep(map, *out_dir);
        }
        const std::size_t n = map.cells.size();
        std::vector<double> n_value(n), omega_peak(n), prominence(n);
        std::vector<std::string> verdict(n);
        std::vector<bool> nonmarkovian(n);
        for (std::size_t i = 0; i < n; ++i) {
          const Cell& c = map.cells[i];
          n_value[i] = c.n_value;
          omega_peak[i] = c.omega_peak;
          prominence[i] = c.prominence;
          nonmarkovian[i] = c.nonmarkovian;
          verdict[i] = c.error.empty() ? to_string(c.verdict) : "Error";
        }
        const auto shape = std::vector<py::ssize_t>{static_cast<py::ssize_t>(map.delta_values.size()),
                                                    static_cast<py::ssize_t>(map.v_values.size())};
        py::dict d;
        d["delta"] = to_array(map.delta_values);
        d["v"] = to_array(map.v_values);
        d["n_value"] = to_array(n_value).reshape(shape);
        d["omega_peak"] = to_array(omega_peak).reshape(shape);
        d["prominence"] = to_array(prominence).reshape(shape);
        d["nonmarkovian"] = py::array(py::cast(nonmarkovian)).reshape(shape);
        d["verdict"] = verdict;
        d["omega_m"] = map.threshold.omega_m;
        d["manifest"] = map.manifest.dump();
        return d;
      },
      py::arg("config_json") = "{}", py::arg("out_dir") = py::none(), py::arg("workers") = 1,
      "Region sweep; grids are (delta, v) with v varying fastest.");

  m.def("figure_datasets", &figure_datasets, py::arg("figure_id"), py::arg("out_dir"), py::arg("workers") = 1);
}
