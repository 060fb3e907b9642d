#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace maxquad {

/// Shortest round-trippable decimal representation of a double.
/// Used for all CSV output so repeated runs are byte-identical.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline uint64_t fnv1a(std::string_view text) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const char ch : text) {
    h ^= uint8_t(ch);
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace maxquad
