#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace hpnq {

// Locale-independent fixed-point formatting.
inline std::string format_fixed(double v, int precision = 6) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  if (ec != std::errc{}) return "nan";
  std::string s(buf, end);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);  // no "-0.000000"
  return s;
}

}  // namespace hpnq
