#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace csmaap {

/// Shortest round-trip decimal form of `value`; "nan" and "inf"/"-inf" for
/// non-finite values. Locale independent, so output files are reproducible.
inline std::string fmt_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace csmaap
