#pragma once

// Deterministic random formulas and traces shared by the property tests.

#include <cstdint>
#include <random>
#include <vector>

#include "stlgame/formula.hpp"
#include "stlgame/monitor.hpp"

namespace testutil {

// Uniform double in [lo, hi) built from raw engine bits so the stream is
// identical on every platform.
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline stlgame::stl::Predicate random_predicate(std::mt19937_64& rng, int dim) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
  int nonzero = uniform_int(rng, 1, dim);
  for (int k = 0; k < nonzero; ++k) {
    int i = uniform_int(rng, 0, dim - 1);
    c[i] = uniform(rng, -2.0, 2.0);
    if (c[i] == 0.0) c[i] = 1.0;
  }
  if (c.isZero(0.0)) c[0] = 1.0;
  return stlgame::stl::Predicate(c, uniform(rng, -3.0, 3.0));
}

inline stlgame::stl::FormulaPtr random_formula(std::mt19937_64& rng, int dim, int depth) {
  using stlgame::stl::Formula;
  if (depth <= 0) {
    if (rng() % 8 == 0) return Formula::make_true();
    return Formula::make_pred(random_predicate(rng, dim));
  }
  switch (rng() % 8) {
    case 0:
      return Formula::make_pred(random_predicate(rng, dim));
    case 1:
      return Formula::make_not(random_formula(rng, dim, depth - 1));
    case 2:
    case 3: {
      // Two or more children: a singleton conjunction has no concrete
      // syntax of its own, so it would not survive a print/parse round trip.
      std::vector<stlgame::stl::FormulaPtr> cs;
      int n = uniform_int(rng, 2, 3);
      for (int i = 0; i < n; ++i) cs.push_back(random_formula(rng, dim, depth - 1));
      return (rng() % 2) ? Formula::make_and(std::move(cs)) : Formula::make_or(std::move(cs));
    }
    case 4: {
      int a = uniform_int(rng, 0, 2);
      int b = a + uniform_int(rng, 0, 3);
      return Formula::make_eventually(random_formula(rng, dim, depth - 1), a, b);
    }
    case 5: {
      int a = uniform_int(rng, 0, 2);
      int b = a + uniform_int(rng, 0, 3);
      return Formula::make_always(random_formula(rng, dim, depth - 1), a, b);
    }
    default: {
      int a = uniform_int(rng, 0, 2);
      int b = a + uniform_int(rng, 0, 3);
      return Formula::make_until(random_formula(rng, dim, depth - 1),
                                 random_formula(rng, dim, depth - 1), a, b);
    }
  }
}

inline stlgame::stl::Trace random_trace(std::mt19937_64& rng, int dim, int length) {
  stlgame::stl::Trace tr;
  tr.states.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) x[i] = uniform(rng, -5.0, 5.0);
    tr.states.push_back(std::move(x));
  }
  return tr;
}

}  // namespace testutil
