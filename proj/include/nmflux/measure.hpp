#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "nmflux/params.hpp"

namespace nmflux {

struct RevivalInterval {
  double start;
  double end;
};

/// Trace-distance measure for the pair (|1><1|, |0><0|), whose distance is
/// the excited population |c(t)|^2.
struct NMResult {
  double n_value = 0.0;  ///< sum of population gains over revival intervals
  /// max over intervals of gain / |c(t_end)|^2; insensitive to how far the
  /// population has decayed before the revival.
  double max_relative_revival = 0.0;
  std::vector<RevivalInterval> revival_intervals;  ///< sorted, disjoint
  TimeGrid grid;
};

/// Revival intervals are the runs where d|c|^2/dt > 0, located on the grid and
/// refined by bisection to 1e-8 / gamma; the integral of the positive part is
/// taken exactly by telescoping |c|^2 over each interval. Requires c(0) = 1.
NMResult nm_measure(const ModelParams& p, const TimeGrid& grid);

/// Settings for the yes/no non-Markovianity test. Times are in units of 1/gamma.
///
/// Just above the critical coupling the first revival happens late and is
/// exponentially small in absolute terms, so the decision uses the relative
/// revival size over a long horizon rather than the truncated measure.
struct DetectionOptions {
  double horizon = 200.0;
  double dt = 1e-2;
  double eps_n = 1e-10;
};

bool is_nonmarkovian(const ModelParams& p, const DetectionOptions& opt = {});
/// Convenience overload for (V, delta) in units of gamma = 1.
bool is_nonmarkovian(double v, double delta, const DetectionOptions& opt = {});

struct BoundaryPoint {
  double delta;
  double v_markovian;     ///< largest coupling known Markovian
  double v_nonmarkovian;  ///< smallest coupling known non-Markovian
  double v_c() const { return 0.5 * (v_markovian + v_nonmarkovian); }
};

struct BoundaryCurve {
  std::vector<BoundaryPoint> points;
  std::vector<double> unbracketed;  ///< deltas where v_lo, v_hi did not bracket the transition
  std::vector<double> all_markovian;  ///< unbracketed deltas with both ends Markovian
  double v_lo = 0.0;
  double v_hi = 0.0;
};

/// Bisection on V (units of gamma = 1) at each delta until the bracket is
/// narrower than tol_v. Deltas are independent and may run in parallel.
BoundaryCurve markovian_boundary(std::span<const double> deltas, double v_lo, double v_hi, double tol_v = 1e-3,
                                 const DetectionOptions& opt = {}, unsigned workers = 1);

enum class SignAxis { Detuning, Coupling };

/// Sign of C(t) = d|c|^2/dt and B(t) = d(gamma |b|^2)/dt over (t, delta) at
/// fixed V or over (t, V) at fixed delta. Rows follow `axis_values`.
struct SignMap {
  SignAxis axis = SignAxis::Detuning;
  double fixed = 0.0;
  std::vector<double> times;
  std::vector<double> axis_values;
  std::vector<std::uint8_t> c_pos;
  std::vector<std::uint8_t> b_pos;

  bool c(std::size_t row, std::size_t col) const { return c_pos[row * times.size() + col] != 0; }
  bool b(std::size_t row, std::size_t col) const { return b_pos[row * times.size() + col] != 0; }
};

SignMap sign_map(SignAxis axis, double fixed, std::span<const double> times, std::span<const double> axis_values,
                 double gamma = 1.0);

void write_sign_map_csv(std::ostream& os, const SignMap& map);
void write_boundary_csv(std::ostream& os, const BoundaryCurve& curve);

}  // namespace nmflux
