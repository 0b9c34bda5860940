#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nmflux/params.hpp"

namespace nmflux {

/// d = sqrt(-16 V^2 + (gamma + 2 i delta)^2), principal branch.
///
/// Accepts gamma = 0 (the lossless limit) as well as the physical gamma > 0.
cplx splitting(double gamma, double v, double delta);
inline cplx splitting(const ModelParams& p) { return splitting(p.gamma, p.v, p.delta); }

struct Amplitudes {
  cplx c;  ///< atom excited-state amplitude
  cplx b;  ///< pseudomode amplitude
};

/// Closed-form amplitudes at time t >= 0 with b(0) = 0.
///
/// The sign of b is fixed so that db/dt(0) = -i V c(0), matching the
/// equation of motion. Near d = 0 the sinh(dt/4)/d factor is replaced by its
/// series, which removes the cancellation around the critical coupling.
Amplitudes amplitudes_analytic(const ModelParams& p, double t);

/// Time derivatives of the atomic population and of the photon flux.
struct Rates {
  double population;  ///< d|c|^2/dt
  double flux;        ///< d(gamma |b|^2)/dt
};

Rates rates_analytic(const ModelParams& p, double t);

/// Exact one-step propagator of (c, b e^{-i delta t}); the rotating-frame
/// equations have constant coefficients so repeated stepping is exact up to
/// rounding.
class Propagator {
 public:
  Propagator(const ModelParams& p, double step);

  /// Advances the rotating-frame state (c, b_rot) by one step.
  void advance(cplx& c, cplx& b_rot) const {
    const cplx c_next = m00_ * c + m01_ * b_rot;
    b_rot = m10_ * c + m11_ * b_rot;
    c = c_next;
  }

  double step() const { return step_; }

 private:
  double step_;
  cplx m00_, m01_, m10_, m11_;
};

struct AmplitudeSeries {
  TimeGrid grid;
  std::vector<cplx> c;
  std::vector<cplx> b;
  cplx c0_ground{0.0, 0.0};
  std::vector<std::string> warnings;

  double population(std::size_t i) const { return std::norm(c[i]); }
  /// |c|^2 + |b|^2, the excitation still inside atom + pseudomode.
  double excitation(std::size_t i) const { return std::norm(c[i]) + std::norm(b[i]); }
};

/// Closed form evaluated on every grid point.
AmplitudeSeries amplitudes_series(const ModelParams& p, const TimeGrid& grid);

/// Classical RK4 integration of the lab-frame amplitude equations,
/// `substeps` RK4 steps per grid interval. Adds a StepTooLarge warning when
/// dt exceeds 1e-2 / max(gamma, V, |delta|, 1).
AmplitudeSeries amplitudes_ode(const ModelParams& p, const TimeGrid& grid, int substeps = 1);

enum class FluxKind { Analytic, McwfEstimate };

struct FluxSeries {
  FluxKind kind = FluxKind::Analytic;
  std::vector<double> times;
  std::vector<double> values;
  // mcwf-estimate only
  std::vector<std::uint64_t> counts;
  std::uint64_t n_traj = 0;
  double bin_width = 0.0;
  std::vector<std::string> warnings;
};

/// R(t) = gamma |b(t)|^2 on the grid.
FluxSeries photon_flux_analytic(const ModelParams& p, const TimeGrid& grid);
/// R(t) at arbitrary times (used for bin centres).
FluxSeries photon_flux_analytic(const ModelParams& p, std::span<const double> times);
FluxSeries photon_flux_from(const AmplitudeSeries& series, double gamma);

/// Trapezoid integral of the flux values (uniform or not).
double integrate_flux(const FluxSeries& flux);

void write_amplitudes_csv(std::ostream& os, const AmplitudeSeries& series);
void write_population_csv(std::ostream& os, const AmplitudeSeries& series);
void write_flux_csv(std::ostream& os, const FluxSeries& flux);

namespace detail {
/// Closed form with an explicitly supplied square root d (either branch).
Amplitudes amplitudes_with_root(const ModelParams& p, double t, cplx d);
}  // namespace detail

}  // namespace nmflux
