#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace stlgame {

/// Shortest decimal string that strtod parses back to exactly the same
/// double. Used everywhere a number becomes text (formulas, CSV, LP files)
/// so that print/parse round trips are lossless.
inline std::string format_double(double v) {
  char buf[48];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

}  // namespace stlgame
