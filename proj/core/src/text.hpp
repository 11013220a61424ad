#pragma once

#include <charconv>
#include <string>
#include <string_view>

#include "pada/error.hpp"

namespace pada::detail {

/// Shortest representation that parses back to the same value.
template <class T>
std::string format_number(T value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) {
    throw Error(ErrorKind::format, "cannot parse " + std::string(what) + " '" +
                                       std::string(s) + "'");
  }
  return v;
}

}  // namespace pada::detail
