#pragma once

#include <cstdio>
#include <string>

namespace wce::text {

/// Locale-independent %.6g.
inline std::string format_g6(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.6g", x == 0.0 ? 0.0 : x);
  return std::string(buf, static_cast<std::size_t>(n));
}

/// Locale-independent round-trip representation.
inline std::string format_g17(double x) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace wce::text
