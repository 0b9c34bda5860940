#include "nmflux/parallel.hpp"

#include <cstdlib>
#include <string>

namespace nmflux {

unsigned default_workers() {
  if (const char* env = std::getenv("NM_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace nmflux
