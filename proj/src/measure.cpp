#include "nmflux/measure.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "nmflux/dynamics.hpp"
#include "nmflux/error.hpp"
#include "nmflux/format.hpp"
#include "nmflux/parallel.hpp"

namespace nmflux {

namespace {

constexpr double kGuard = 64.0 * std::numeric_limits<double>::epsilon();

// Sign of d|c|^2/dt at t; the search keeps `neg` non-positive and `pos` positive.
double refine_sign_change(const ModelParams& p, double neg, double pos, double tol) {
  while (std::abs(pos - neg) > tol) {
    const double mid = 0.5 * (neg + pos);
    if (mid == neg || mid == pos) break;
    if (rates_analytic(p, mid).population > 0.0)
      pos = mid;
    else
      neg = mid;
  }
  return 0.5 * (neg + pos);
}

}  // namespace

NMResult nm_measure(const ModelParams& p, const TimeGrid& grid) {
  p.validate();
  if (std::abs(p.c0_init - cplx{1.0, 0.0}) > 1e-12)
    throw UnsupportedInitialState("the measure needs c(0) = 1 (optimal pair |1><1|, |0><0|)");

  NMResult res;
  res.grid = grid;
  if (grid.size < 2 || p.v == 0.0) return res;

  // sigma on the grid from the exact propagator in the rotating frame
  const Propagator prop(p, grid.dt);
  std::vector<std::uint8_t> rising(grid.size, 0);
  cplx c = p.c0_init;
  cplx b_rot{0.0, 0.0};
  for (std::size_t i = 0; i < grid.size; ++i) {
    if (i > 0) prop.advance(c, b_rot);
    const double sigma = 2.0 * p.v * std::imag(std::conj(c) * b_rot);
    rising[i] = sigma > kGuard * 2.0 * p.v * std::abs(c) * std::abs(b_rot);
  }

  const double tol = 1e-8 / p.gamma;
  const cplx d = splitting(p);
  auto population = [&](double t) { return std::norm(detail::amplitudes_with_root(p, t, d).c); };

  std::size_t i = 0;
  while (i < grid.size) {
    if (!rising[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size && rising[j + 1]) ++j;
    const double start = i == 0 ? grid[0] : refine_sign_change(p, grid[i - 1], grid[i], tol);
    const double end = j + 1 == grid.size ? grid[j] : refine_sign_change(p, grid[j + 1], grid[j], tol);
    const double p_start = population(start);
    const double p_end = population(end);
    const double gain = std::max(0.0, p_end - p_start);
    res.revival_intervals.push_back({start, end});
    res.n_value += gain;
    if (p_end > 0.0) res.max_relative_revival = std::max(res.max_relative_revival, gain / p_end);
    i = j + 1;
  }
  return res;
}

bool is_nonmarkovian(const ModelParams& p, const DetectionOptions& opt) {
  ModelParams q = p;
  q.t_max = opt.horizon / p.gamma;
  const NMResult r = nm_measure(q, TimeGrid::covering(q.t_max, opt.dt / p.gamma));
  return r.max_relative_revival > opt.eps_n;
}

bool is_nonmarkovian(double v, double delta, const DetectionOptions& opt) {
  ModelParams p;
  p.v = v;
  p.delta = delta;
  return is_nonmarkovian(p, opt);
}

BoundaryCurve markovian_boundary(std::span<const double> deltas, double v_lo, double v_hi, double tol_v,
                                 const DetectionOptions& opt, unsigned workers) {
  if (!(v_lo >= 0.0 && v_hi > v_lo)) throw InvalidParams("v_search", "need 0 <= v_lo < v_hi");
  if (!(tol_v > 0.0)) throw InvalidParams("tol_v", "must be > 0");

  struct Slot {
    bool bracketed = false;
    bool markovian_at_hi = false;
    BoundaryPoint point{};
  };
  std::vector<Slot> slots(deltas.size());
  parallel_for(deltas.size(), workers, [&](std::size_t k) {
    const double delta = deltas[k];
    if (is_nonmarkovian(v_lo, delta, opt)) return;
    if (!is_nonmarkovian(v_hi, delta, opt)) {
      slots[k].markovian_at_hi = true;
      return;
    }
    double lo = v_lo;
    double hi = v_hi;
    while (hi - lo > tol_v) {
      const double mid = 0.5 * (lo + hi);
      if (is_nonmarkovian(mid, delta, opt))
        hi = mid;
      else
        lo = mid;
    }
    slots[k].bracketed = true;
    slots[k].point = {delta, lo, hi};
  });

  BoundaryCurve curve;
  curve.v_lo = v_lo;
  curve.v_hi = v_hi;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (slots[k].bracketed)
      curve.points.push_back(slots[k].point);
    else
      curve.unbracketed.push_back(deltas[k]);
    if (slots[k].markovian_at_hi) curve.all_markovian.push_back(deltas[k]);
  }
  return curve;
}

SignMap sign_map(SignAxis axis, double fixed, std::span<const double> times, std::span<const double> axis_values,
                 double gamma) {
  SignMap m;
  m.axis = axis;
  m.fixed = fixed;
  m.times.assign(times.begin(), times.end());
  m.axis_values.assign(axis_values.begin(), axis_values.end());
  m.c_pos.assign(times.size() * axis_values.size(), 0);
  m.b_pos.assign(times.size() * axis_values.size(), 0);
  for (std::size_t row = 0; row < axis_values.size(); ++row) {
    ModelParams p;
    p.gamma = gamma;
    p.v = axis == SignAxis::Detuning ? fixed : axis_values[row];
    p.delta = axis == SignAxis::Detuning ? axis_values[row] : fixed;
    for (std::size_t col = 0; col < times.size(); ++col) {
      const double t = times[col];
      const Amplitudes a = amplitudes_analytic(p, t);
      const Rates r = rates_analytic(p, t);
      const double exchange_scale = 2.0 * p.v * std::abs(a.c) * std::abs(a.b);
      const std::size_t idx = row * times.size() + col;
      m.c_pos[idx] = r.population > kGuard * exchange_scale;
      m.b_pos[idx] = r.flux > kGuard * p.gamma * (p.gamma * std::norm(a.b) + exchange_scale);
    }
  }
  return m;
}

void write_sign_map_csv(std::ostream& os, const SignMap& m) {
  os << "t," << (m.axis == SignAxis::Detuning ? "delta" : "v") << ",c_pos,b_pos\n";
  for (std::size_t row = 0; row < m.axis_values.size(); ++row)
    for (std::size_t col = 0; col < m.times.size(); ++col)
      os << fmt_double(m.times[col]) << ',' << fmt_double(m.axis_values[row]) << ',' << int(m.c(row, col)) << ','
         << int(m.b(row, col)) << '\n';
}

void write_boundary_csv(std::ostream& os, const BoundaryCurve& curve) {
  os << "delta,v_c\n";
  for (const auto& pt : curve.points) os << fmt_double(pt.delta) << ',' << fmt_double(pt.v_c()) << '\n';
}

}  // namespace nmflux
