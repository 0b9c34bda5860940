#pragma once

namespace nmflux {

inline constexpr const char* kEngineVersion = "0.1.0";

}  // namespace nmflux
