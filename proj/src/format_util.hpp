#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace qbm::detail {

/// Shortest decimal that parses back to the same double.
inline std::string shortest(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

inline std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

}  // namespace qbm::detail
