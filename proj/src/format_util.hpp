#pragma once

#include <charconv>
#include <string>

namespace lne::detail {

/// Shortest decimal form that round-trips the exact double, so text outputs
/// (CSV, JSON-adjacent manifests, truth specs) are reproducible bit for bit.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace lne::detail
