#include "nmflux/dynamics.hpp"

#include <algorithm>
#include <array>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <ostream>

#include "nmflux/format.hpp"

namespace nmflux {

namespace {

constexpr cplx kI{0.0, 1.0};
// Below this |d| t / 4 the sinh(x)/x factor is taken from its series.
constexpr double kSeriesSwitch = 1e-6;

// Pieces shared by the closed form and the propagator:
//   e^{mu t} cosh(x)  and  e^{mu t} t sinh(x)/x,  x = d t / 4, mu = -(gamma + 2 i delta)/4.
struct Kernel {
  cplx mu;
  cplx cosh_part;
  cplx sinhc_part;
};

Kernel kernel(double gamma, double delta, cplx d, double t) {
  const cplx mu = -(gamma + 2.0 * kI * delta) / 4.0;
  const cplx x = d * t / 4.0;
  if (std::abs(x) < kSeriesSwitch) {
    const cplx e = std::exp(mu * t);
    return {mu, e * (1.0 + x * x / 2.0), e * t * (1.0 + x * x / 6.0)};
  }
  // Factor out the growing exponential so large t cannot overflow cosh/sinh.
  const cplx grow = std::exp((mu + d / 4.0) * t);
  const cplx q = std::exp(-d * t / 2.0);
  return {mu, grow * (1.0 + q) / 2.0, grow * (1.0 - q) / (2.0 * x) * t};
}

}  // namespace

cplx splitting(double gamma, double v, double delta) {
  const cplx a{gamma, 2.0 * delta};
  return std::sqrt(a * a - 16.0 * v * v);
}

namespace detail {

Amplitudes amplitudes_with_root(const ModelParams& p, double t, cplx d) {
  const Kernel k = kernel(p.gamma, p.delta, d, t);
  // c = e^{mu t}[cosh x - mu t sinhc x] c0,  b_rot = -i V t sinhc x e^{mu t} c0
  const cplx c = (k.cosh_part - k.mu * k.sinhc_part) * p.c0_init;
  const cplx b_rot = -kI * p.v * k.sinhc_part * p.c0_init;
  return {c, b_rot * std::exp(kI * p.delta * t)};
}

}  // namespace detail

Amplitudes amplitudes_analytic(const ModelParams& p, double t) {
  return detail::amplitudes_with_root(p, t, splitting(p));
}

Rates rates_analytic(const ModelParams& p, double t) {
  const Amplitudes a = amplitudes_analytic(p, t);
  const cplx b_rot = a.b * std::exp(-kI * p.delta * t);
  // d|c|^2/dt = 2 V Im(conj(c) b_rot);  d|b|^2/dt = -gamma |b|^2 - 2 V Im(conj(c) b_rot)
  const double exchange = 2.0 * p.v * std::imag(std::conj(a.c) * b_rot);
  return {exchange, p.gamma * (-p.gamma * std::norm(a.b) - exchange)};
}

Propagator::Propagator(const ModelParams& p, double step) : step_(step) {
  const Kernel k = kernel(p.gamma, p.delta, splitting(p), step);
  // exp(A h) = e^{mu h}[cosh(x) I + h sinhc(x) (A - mu I)],  A - mu I = [[-mu, -iV], [-iV, mu]]
  m00_ = k.cosh_part - k.mu * k.sinhc_part;
  m11_ = k.cosh_part + k.mu * k.sinhc_part;
  m01_ = -kI * p.v * k.sinhc_part;
  m10_ = m01_;
}

AmplitudeSeries amplitudes_series(const ModelParams& p, const TimeGrid& grid) {
  AmplitudeSeries s;
  s.grid = grid;
  s.c.resize(grid.size);
  s.b.resize(grid.size);
  s.c0_ground = p.ground_amplitude();
  const cplx d = splitting(p);
  for (std::size_t i = 0; i < grid.size; ++i) {
    const Amplitudes a = detail::amplitudes_with_root(p, grid[i], d);
    s.c[i] = a.c;
    s.b[i] = a.b;
  }
  return s;
}

AmplitudeSeries amplitudes_ode(const ModelParams& p, const TimeGrid& grid, int substeps) {
  using State = std::array<cplx, 2>;
  namespace odeint = boost::numeric::odeint;

  AmplitudeSeries s;
  s.grid = grid;
  s.c0_ground = p.ground_amplitude();
  const double limit = 1e-2 / std::max({p.gamma, p.v, std::abs(p.delta), 1.0});
  if (grid.dt > limit)
    s.warnings.push_back("StepTooLarge: dt = " + fmt_double(grid.dt) + " exceeds " + fmt_double(limit));

  auto rhs = [&p](const State& y, State& dy, double t) {
    dy[0] = -kI * p.v * std::exp(-kI * p.delta * t) * y[1];
    dy[1] = -0.5 * p.gamma * y[1] - kI * p.v * std::exp(kI * p.delta * t) * y[0];
  };

  odeint::runge_kutta4<State, double, State, double> stepper;
  State y{p.c0_init, cplx{0.0, 0.0}};
  s.c.reserve(grid.size);
  s.b.reserve(grid.size);
  const int n_sub = std::max(1, substeps);
  const double h = grid.dt / n_sub;
  for (std::size_t i = 0; i < grid.size; ++i) {
    if (i > 0) {
      double t = grid[i - 1];
      for (int k = 0; k < n_sub; ++k) {
        stepper.do_step(rhs, y, t, h);
        t += h;
      }
    }
    s.c.push_back(y[0]);
    s.b.push_back(y[1]);
  }
  return s;
}

FluxSeries photon_flux_from(const AmplitudeSeries& series, double gamma) {
  FluxSeries f;
  f.kind = FluxKind::Analytic;
  f.times.resize(series.grid.size);
  f.values.resize(series.grid.size);
  for (std::size_t i = 0; i < series.grid.size; ++i) {
    f.times[i] = series.grid[i];
    f.values[i] = gamma * std::norm(series.b[i]);
  }
  return f;
}

FluxSeries photon_flux_analytic(const ModelParams& p, const TimeGrid& grid) {
  return photon_flux_from(amplitudes_series(p, grid), p.gamma);
}

FluxSeries photon_flux_analytic(const ModelParams& p, std::span<const double> times) {
  FluxSeries f;
  f.kind = FluxKind::Analytic;
  f.times.assign(times.begin(), times.end());
  f.values.reserve(times.size());
  const cplx d = splitting(p);
  for (double t : times) f.values.push_back(p.gamma * std::norm(detail::amplitudes_with_root(p, t, d).b));
  return f;
}

double integrate_flux(const FluxSeries& flux) {
  double sum = 0.0;
  for (std::size_t i = 1; i < flux.values.size(); ++i)
    sum += 0.5 * (flux.values[i] + flux.values[i - 1]) * (flux.times[i] - flux.times[i - 1]);
  return sum;
}

void write_amplitudes_csv(std::ostream& os, const AmplitudeSeries& s) {
  os << "t,re_c,im_c,re_b,im_b\n";
  for (std::size_t i = 0; i < s.grid.size; ++i) {
    os << fmt_double(s.grid[i]) << ',' << fmt_double(s.c[i].real()) << ',' << fmt_double(s.c[i].imag()) << ','
       << fmt_double(s.b[i].real()) << ',' << fmt_double(s.b[i].imag()) << '\n';
  }
}

void write_population_csv(std::ostream& os, const AmplitudeSeries& s) {
  os << "t,population\n";
  for (std::size_t i = 0; i < s.grid.size; ++i) os << fmt_double(s.grid[i]) << ',' << fmt_double(s.population(i)) << '\n';
}

void write_flux_csv(std::ostream& os, const FluxSeries& f) {
  os << "t,flux\n";
  for (std::size_t i = 0; i < f.values.size(); ++i) os << fmt_double(f.times[i]) << ',' << fmt_double(f.values[i]) << '\n';
}

}  // namespace nmflux
