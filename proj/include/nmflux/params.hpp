#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace nmflux {

using cplx = std::complex<double>;

/// Physical parameters of the atom + pseudomode model.
///
/// All fields share one (arbitrary) unit system; the closed forms are
/// homogeneous, so quoting everything in units of `gamma` (gamma = 1) is the
/// usual convention.
struct ModelParams {
  double gamma = 1.0;     ///< pseudomode decay rate
  double v = 0.0;         ///< atom-pseudomode coupling
  double delta = 0.0;     ///< detuning omega_P - omega_A
  cplx c0_init{1.0, 0.0}; ///< initial excited-state amplitude
  double t_max = 14.0;    ///< observation time

  /// Throws InvalidParams naming the first offending field.
  void validate() const;

  /// |c0_ground|, the constant ground-state amplitude fixed by normalisation.
  double ground_amplitude() const;
};

/// Uniform grid t_i = i * dt, i = 0 .. size-1.
struct TimeGrid {
  double dt = 1e-3;
  std::size_t size = 0;

  double operator[](std::size_t i) const { return static_cast<double>(i) * dt; }
  double back() const { return (*this)[size - 1]; }

  /// Grid covering [0, t_max]; t_max is rounded down to a multiple of dt.
  static TimeGrid covering(double t_max, double dt);
};

/// Default step and horizon, in units of 1/gamma.
inline constexpr double kDefaultStep = 1e-3;
inline constexpr double kDefaultHorizon = 14.0;

/// n evenly spaced values from lo to hi inclusive (n == 1 gives {lo}).
std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace nmflux
