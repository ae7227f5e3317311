#pragma once

#include <charconv>
#include <string>

namespace chronoctl {

/// Locale-independent text for a double with 17 significant digits, enough
/// to round-trip every finite value.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace chronoctl
