#pragma once

#include <string>

namespace nmflux {

/// Round-trippable decimal with 17 significant digits.
std::string fmt_double(double x);

}  // namespace nmflux
