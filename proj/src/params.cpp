#include "nmflux/params.hpp"

#include <cmath>

#include "nmflux/error.hpp"

namespace nmflux {

void ModelParams::validate() const {
  if (!(std::isfinite(gamma) && gamma > 0.0)) throw InvalidParams("gamma", "must be finite and > 0");
  if (!(std::isfinite(v) && v >= 0.0)) throw InvalidParams("v", "must be finite and >= 0");
  if (!std::isfinite(delta)) throw InvalidParams("delta", "must be finite");
  if (!(std::isfinite(c0_init.real()) && std::isfinite(c0_init.imag())) || std::abs(c0_init) > 1.0 + 1e-12)
    throw InvalidParams("c0", "|c0| must be <= 1");
  if (!(std::isfinite(t_max) && t_max > 0.0)) throw InvalidParams("t_max", "must be finite and > 0");
}

double ModelParams::ground_amplitude() const {
  return std::sqrt(std::max(0.0, 1.0 - std::norm(c0_init)));
}

TimeGrid TimeGrid::covering(double t_max, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParams("dt", "must be finite and > 0");
  if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw InvalidParams("t_max", "must be finite and >= 0");
  const auto steps = static_cast<std::size_t>(std::floor(t_max / dt + 1e-9));
  return TimeGrid{dt, steps + 1};
}

}  // namespace nmflux

namespace nmflux {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace nmflux
