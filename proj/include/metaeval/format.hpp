#pragma once

#include <charconv>
#include <string>

namespace metaeval {

// Shortest decimal form that round-trips to the same double. Locale-free,
// so identical configurations produce byte-identical reports.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace metaeval
