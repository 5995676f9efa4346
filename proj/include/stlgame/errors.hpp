#pragma once

#include <stdexcept>
#include <string>

namespace stlgame {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed user input: bad formula text, bad scenario file, trace too
/// short, inputs out of bounds.
struct InputError : Error {
  using Error::Error;
};

/// Formula text rejected by the parser. Positions are 1-based.
struct ParseError : InputError {
  ParseError(const std::string& msg, int line_, int col_)
      : InputError(msg + " (line " + std::to_string(line_) + ", col " +
                   std::to_string(col_) + ")"),
        line(line_), col(col_) {}
  int line;
  int col;
};

/// Inconsistent configuration, e.g. a big-M constant smaller than the
/// reachable predicate range.
struct ConfigError : Error {
  using Error::Error;
};

/// Unexpected internal state (solver failure, broken invariant).
struct InternalError : Error {
  using Error::Error;
};

}  // namespace stlgame
