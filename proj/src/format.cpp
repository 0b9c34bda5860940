#include "nmflux/format.hpp"

#include <cstdio>

namespace nmflux {

std::string fmt_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace nmflux
