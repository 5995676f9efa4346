#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stlgame/formula.hpp"

namespace stlgame::stl {

/// Finite state signal x_0 .. x_T sampled at unit steps.
struct Trace {
  std::vector<Eigen::VectorXd> states;

  int length() const { return static_cast<int>(states.size()); }
  int max_time() const { return static_cast<int>(states.size()) - 1; }
};

/// Boolean satisfaction of f by the trace suffix starting at t. Negation is
/// exact logical complement, so !(mu >= 0) holds iff mu < 0. Throws
/// InputError when the trace is shorter than t + horizon(f).
bool eval_bool(const Formula& f, const Trace& trace, int t = 0);

/// Min/max space robustness of f at time t. Positive values imply Boolean
/// satisfaction and negative values imply violation; zero is inconclusive.
/// The robustness of "true" is +infinity.
double robustness(const Formula& f, const Trace& trace, int t = 0);

}  // namespace stlgame::stl
