#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "random_formula.hpp"
#include "stlgame/milp.hpp"

using namespace stlgame;
using namespace stlgame::milp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Independent oracle #1: a deliberately naive textbook simplex.
//
// Dense Big-M tableau over nonnegative slack/surplus/artificial variables,
// Bland's pivoting rule throughout. Box bounds become explicit rows. It
// shares no code with the production solver; it is the reference the
// production LP results are checked against.
// ---------------------------------------------------------------------------

struct OracleLp {
  // minimize c·x subject to rows and finite boxes l <= x <= u
  std::vector<std::vector<double>> rows;  // coefficients per constraint
  std::vector<int> senses;                // -1: <=, 0: =, +1: >=
  std::vector<double> rhs;
  std::vector<double> c, l, u;

  // Returns the optimal objective; nullopt when infeasible. Assumes the
  // boxes are finite so the problem is never unbounded.
  std::optional<double> solve() const {
    int n = static_cast<int>(c.size());
    // Shift x = y + l so y >= 0; add y_j <= u_j - l_j as explicit rows.
    std::vector<std::vector<double>> A = rows;
    std::vector<int> sn = senses;
    std::vector<double> b = rhs;
    for (std::size_t i = 0; i < A.size(); ++i) {
      double shift = 0.0;
      for (int j = 0; j < n; ++j) shift += A[i][j] * l[static_cast<std::size_t>(j)];
      b[i] -= shift;
    }
    for (int j = 0; j < n; ++j) {
      std::vector<double> row(static_cast<std::size_t>(n), 0.0);
      row[static_cast<std::size_t>(j)] = 1.0;
      A.push_back(row);
      sn.push_back(-1);
      b.push_back(u[static_cast<std::size_t>(j)] - l[static_cast<std::size_t>(j)]);
    }
    int m = static_cast<int>(A.size());
    for (int i = 0; i < m; ++i) {
      if (b[static_cast<std::size_t>(i)] < 0.0) {
        for (double& a : A[static_cast<std::size_t>(i)]) a = -a;
        b[static_cast<std::size_t>(i)] = -b[static_cast<std::size_t>(i)];
        sn[static_cast<std::size_t>(i)] = -sn[static_cast<std::size_t>(i)];
      }
    }
    // Columns: y (n), then slack/surplus, then artificials.
    int extra = 0;
    for (int s : sn) extra += (s != 0) ? 1 : 0;
    int art = 0;
    for (int s : sn) art += (s >= 0) ? 1 : 0;
    int total = n + extra + art;
    const double bigM = 1e7;
    std::vector<std::vector<double>> T(static_cast<std::size_t>(m),
                                       std::vector<double>(static_cast<std::size_t>(total), 0.0));
    std::vector<double> cost(static_cast<std::size_t>(total), 0.0);
    for (int j = 0; j < n; ++j) cost[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j)];
    std::vector<int> basis(static_cast<std::size_t>(m), -1);
    int col = n;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (sn[static_cast<std::size_t>(i)] == -1) {
        T[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] = 1.0;
        basis[static_cast<std::size_t>(i)] = col++;
      } else if (sn[static_cast<std::size_t>(i)] == 1) {
        T[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] = -1.0;
        ++col;
      }
    }
    for (int i = 0; i < m; ++i) {
      if (sn[static_cast<std::size_t>(i)] >= 0) {
        T[static_cast<std::size_t>(i)][static_cast<std::size_t>(col)] = 1.0;
        cost[static_cast<std::size_t>(col)] = bigM;
        basis[static_cast<std::size_t>(i)] = col++;
      }
    }
    std::vector<double> bb = b;
    for (long long iter = 0; iter < 200000; ++iter) {
      // Reduced costs r_j = c_j - c_B·B^{-1}A_j read off the tableau.
      int enter = -1;
      for (int j = 0; j < total; ++j) {
        double r = cost[static_cast<std::size_t>(j)];
        for (int i = 0; i < m; ++i) {
          r -= cost[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] *
               T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        if (r < -1e-9) {
          enter = j;  // Bland: lowest eligible index
          break;
        }
      }
      if (enter < 0) break;
      int leave = -1;
      double best = kInf;
      for (int i = 0; i < m; ++i) {
        double t = T[static_cast<std::size_t>(i)][static_cast<std::size_t>(enter)];
        if (t > 1e-9) {
          double ratio = bb[static_cast<std::size_t>(i)] / t;
          if (ratio < best - 1e-12 ||
              (ratio < best + 1e-12 &&
               (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]))) {
            best = ratio;
            leave = i;
          }
        }
      }
      if (leave < 0) return std::nullopt;  // unbounded: not expected here
      double piv = T[static_cast<std::size_t>(leave)][static_cast<std::size_t>(enter)];
      for (int j = 0; j < total; ++j) T[static_cast<std::size_t>(leave)][static_cast<std::size_t>(j)] /= piv;
      bb[static_cast<std::size_t>(leave)] /= piv;
      for (int i = 0; i < m; ++i) {
        if (i == leave) continue;
        double f = T[static_cast<std::size_t>(i)][static_cast<std::size_t>(enter)];
        if (f == 0.0) continue;
        for (int j = 0; j < total; ++j) {
          T[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -=
              f * T[static_cast<std::size_t>(leave)][static_cast<std::size_t>(j)];
        }
        bb[static_cast<std::size_t>(i)] -= f * bb[static_cast<std::size_t>(leave)];
      }
      basis[static_cast<std::size_t>(leave)] = enter;
    }
    double obj = 0.0;
    for (int i = 0; i < m; ++i) {
      int j = basis[static_cast<std::size_t>(i)];
      if (j >= n + extra && bb[static_cast<std::size_t>(i)] > 1e-6) {
        return std::nullopt;  // artificial stuck basic: infeasible
      }
      if (j < n) obj += c[static_cast<std::size_t>(j)] * bb[static_cast<std::size_t>(i)];
    }
    double shift = 0.0;
    for (int j = 0; j < n; ++j) shift += c[static_cast<std::size_t>(j)] * l[static_cast<std::size_t>(j)];
    return obj + shift;
  }
};

// Oracle #2 for mixed binary models: enumerate every binary combination,
// solve the continuous remainder with the LP path, keep the best.
std::optional<double> enumerate_milp(const MilpModel& model) {
  std::vector<int> bins;
  for (int j = 0; j < model.num_variables(); ++j) {
    if (model.variables()[static_cast<std::size_t>(j)].kind == VarKind::Binary) {
      bins.push_back(j);
    }
  }
  REQUIRE(bins.size() <= 16);
  bool minimize = model.objective_sense() == ObjSense::Minimize;
  std::optional<double> best;
  for (unsigned mask = 0; mask < (1u << bins.size()); ++mask) {
    MilpModel fixed;
    for (int j = 0; j < model.num_variables(); ++j) {
      const Variable& v = model.variables()[static_cast<std::size_t>(j)];
      double lo = v.lower, up = v.upper;
      auto it = std::find(bins.begin(), bins.end(), j);
      if (it != bins.end()) {
        double val = (mask >> (it - bins.begin())) & 1u ? 1.0 : 0.0;
        if (val < v.lower - 1e-12 || val > v.upper + 1e-12) {
          lo = 1.0;
          up = 0.0;  // combination conflicts with tightened bounds
        } else {
          lo = up = val;
        }
      }
      if (lo > up) goto next_mask;
      fixed.add_variable(VarKind::Continuous, lo, up, v.name);
    }
    {
      LinExpr obj;
      obj.set_constant(model.objective_offset());
      for (int j = 0; j < model.num_variables(); ++j) {
        double cj = model.objective_coeffs()[static_cast<std::size_t>(j)];
        if (cj != 0.0) obj.add(VarId{j}, cj);
      }
      fixed.set_objective(model.objective_sense(), obj);
      for (const LinConstraint& c : model.constraints()) {
        LinExpr e;
        for (const LinTerm& t : c.terms) e.add(t.var, t.coeff);
        fixed.add_constraint(e, c.sense, c.rhs);
      }
      SolveResult r = solve_lp(fixed);
      if (r.status == SolveStatus::Optimal) {
        if (!best || (minimize ? r.objective < *best : r.objective > *best)) {
          best = r.objective;
        }
      }
    }
  next_mask:;
  }
  return best;
}

bool models_equivalent(const MilpModel& a, const MilpModel& b) {
  if (a.num_variables() != b.num_variables()) return false;
  if (a.num_constraints() != b.num_constraints()) return false;
  if (a.objective_sense() != b.objective_sense()) return false;
  if (a.objective_offset() != b.objective_offset()) return false;
  for (const Variable& va : a.variables()) {
    VarId id = b.find_variable(va.name);
    if (!id.valid()) return false;
    const Variable& vb = b.variable(id);
    if (va.kind != vb.kind || va.lower != vb.lower || va.upper != vb.upper) return false;
    double ca = a.objective_coeffs()[static_cast<std::size_t>(a.find_variable(va.name).index)];
    double cb = b.objective_coeffs()[static_cast<std::size_t>(id.index)];
    if (ca != cb) return false;
  }
  for (int i = 0; i < a.num_constraints(); ++i) {
    const LinConstraint& ca = a.constraints()[static_cast<std::size_t>(i)];
    const LinConstraint& cb = b.constraints()[static_cast<std::size_t>(i)];
    if (ca.sense != cb.sense || ca.rhs != cb.rhs) return false;
    if (ca.terms.size() != cb.terms.size()) return false;
    for (std::size_t k = 0; k < ca.terms.size(); ++k) {
      const std::string& name_a = a.variable(ca.terms[k].var).name;
      VarId in_b = b.find_variable(name_a);
      bool found = false;
      for (const LinTerm& t : cb.terms) {
        if (t.var == in_b) {
          if (t.coeff != ca.terms[k].coeff) return false;
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("model building validates input") {
  MilpModel m;
  VarId x = m.add_continuous(0.0, 3.0, "x");
  CHECK(x.valid());
  CHECK_THROWS_AS(m.add_continuous(0.0, 1.0, "x"), InputError);   // duplicate
  CHECK_THROWS_AS(m.add_continuous(2.0, 1.0, "bad"), InputError);  // crossed
  CHECK_THROWS_AS(m.add_variable(VarKind::Binary, 0.0, 2.0, "b2"), InputError);
  VarId b = m.add_binary("b");
  CHECK(m.variable(b).lower == 0.0);
  CHECK(m.variable(b).upper == 1.0);
  CHECK(m.find_variable("x") == x);
  CHECK_FALSE(m.find_variable("nope").valid());

  LinExpr e = 2.0 * x + LinExpr(b) - 1.0 * x;  // merges to x + b
  CHECK(e.terms().size() == 2);
  CHECK(e.terms()[0].coeff == 1.0);
  m.add_constraint(e, Sense::Le, 1.0);
  CHECK(m.num_constraints() == 1);

  MilpModel other;
  VarId foreign = other.add_continuous(0, 1, "y");
  LinExpr bad_expr = LinExpr(foreign) + LinExpr(x);
  (void)bad_expr;  // references var index 0 which exists in m too: fine
  LinExpr out_of_range;
  out_of_range.add(VarId{42}, 1.0);
  CHECK_THROWS_AS(m.add_constraint(out_of_range, Sense::Le, 0.0), InputError);
}

TEST_CASE("lp: one-variable maximization hits its bound") {
  MilpModel m;
  VarId x = m.add_continuous(0.0, kInf, "x");
  m.add_constraint(LinExpr(x), Sense::Le, 3.0);
  m.set_objective(ObjSense::Maximize, LinExpr(x));
  SolveResult r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.value(x) == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.best_bound == r.objective);
}

TEST_CASE("lp: infeasible pair is reported infeasible") {
  MilpModel m;
  VarId x = m.add_continuous(-kInf, kInf, "x");
  m.add_constraint(LinExpr(x), Sense::Le, 0.0);
  m.add_constraint(LinExpr(x), Sense::Ge, 1.0);
  m.set_objective(ObjSense::Minimize, LinExpr(x));
  SolveResult r = solve_lp(m);
  CHECK(r.status == SolveStatus::Infeasible);
  CHECK_FALSE(r.has_solution());
}

TEST_CASE("lp: unbounded ray is reported unbounded") {
  MilpModel m;
  VarId x = m.add_continuous(-kInf, kInf, "x");
  VarId y = m.add_continuous(0.0, kInf, "y");
  m.add_constraint(LinExpr(x) - LinExpr(y), Sense::Le, 1.0);
  m.set_objective(ObjSense::Maximize, LinExpr(x));
  SolveResult r = solve_lp(m);
  CHECK(r.status == SolveStatus::Unbounded);
}

TEST_CASE("lp: equality rows and free variables") {
  // min x + y  s.t.  x + y = 2,  x - y = 0, both free -> x = y = 1.
  MilpModel m;
  VarId x = m.add_continuous(-kInf, kInf, "x");
  VarId y = m.add_continuous(-kInf, kInf, "y");
  m.add_constraint(LinExpr(x) + LinExpr(y), Sense::Eq, 2.0);
  m.add_constraint(LinExpr(x) - LinExpr(y), Sense::Eq, 0.0);
  m.set_objective(ObjSense::Minimize, LinExpr(x) + LinExpr(y));
  SolveResult r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value(x) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.value(y) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lp: model with no constraints optimizes over the box") {
  MilpModel m;
  VarId x = m.add_continuous(-2.0, 5.0, "x");
  VarId y = m.add_continuous(-1.0, 4.0, "y");
  m.set_objective(ObjSense::Minimize, LinExpr(x) - 2.0 * LinExpr(y));
  SolveResult r = solve_lp(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.value(x) == doctest::Approx(-2.0));
  CHECK(r.value(y) == doctest::Approx(4.0));
  CHECK(r.objective == doctest::Approx(-10.0));
}

TEST_CASE("lp: 50 random feasible boxes match the textbook oracle") {
  std::mt19937_64 rng(20240817u);
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    int n = testutil::uniform_int(rng, 2, 7);
    int rows = testutil::uniform_int(rng, 1, 5);
    OracleLp oracle;
    oracle.c.resize(static_cast<std::size_t>(n));
    oracle.l.resize(static_cast<std::size_t>(n));
    oracle.u.resize(static_cast<std::size_t>(n));
    std::vector<double> interior(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      double a = testutil::uniform(rng, -5.0, 5.0);
      double b = testutil::uniform(rng, -5.0, 5.0);
      oracle.l[static_cast<std::size_t>(j)] = std::min(a, b);
      oracle.u[static_cast<std::size_t>(j)] = std::max(a, b) + 0.1;
      interior[static_cast<std::size_t>(j)] =
          testutil::uniform(rng, oracle.l[static_cast<std::size_t>(j)],
                            oracle.u[static_cast<std::size_t>(j)]);
      oracle.c[static_cast<std::size_t>(j)] = testutil::uniform(rng, -3.0, 3.0);
    }
    for (int i = 0; i < rows; ++i) {
      std::vector<double> row(static_cast<std::size_t>(n));
      double act = 0.0;
      for (int j = 0; j < n; ++j) {
        row[static_cast<std::size_t>(j)] = testutil::uniform(rng, -2.0, 2.0);
        act += row[static_cast<std::size_t>(j)] * interior[static_cast<std::size_t>(j)];
      }
      int sense = testutil::uniform_int(rng, -1, 1);
      double margin = testutil::uniform(rng, 0.0, 2.0);
      // Anchor the row on a known interior point so the LP stays feasible.
      oracle.rows.push_back(row);
      oracle.senses.push_back(sense);
      oracle.rhs.push_back(sense == -1 ? act + margin : sense == 1 ? act - margin : act);
    }

    MilpModel m;
    std::vector<VarId> ids;
    for (int j = 0; j < n; ++j) {
      ids.push_back(m.add_continuous(oracle.l[static_cast<std::size_t>(j)],
                                     oracle.u[static_cast<std::size_t>(j)],
                                     "x" + std::to_string(j)));
    }
    LinExpr obj;
    for (int j = 0; j < n; ++j) obj.add(ids[static_cast<std::size_t>(j)], oracle.c[static_cast<std::size_t>(j)]);
    m.set_objective(ObjSense::Minimize, obj);
    for (std::size_t i = 0; i < oracle.rows.size(); ++i) {
      LinExpr e;
      for (int j = 0; j < n; ++j) e.add(ids[static_cast<std::size_t>(j)], oracle.rows[i][static_cast<std::size_t>(j)]);
      Sense s = oracle.senses[i] == -1 ? Sense::Le : oracle.senses[i] == 1 ? Sense::Ge : Sense::Eq;
      m.add_constraint(e, s, oracle.rhs[i]);
    }

    SolveResult r = solve_lp(m);
    REQUIRE(r.status == SolveStatus::Optimal);
    auto expected = oracle.solve();
    REQUIRE(expected.has_value());
    CHECK(r.objective == doctest::Approx(*expected).epsilon(1e-6));

    // Reported objective must equal c·assignment.
    double recomputed = 0.0;
    for (int j = 0; j < n; ++j) recomputed += oracle.c[static_cast<std::size_t>(j)] * r.value(ids[static_cast<std::size_t>(j)]);
    CHECK(std::abs(recomputed - r.objective) <= 1e-7);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("milp: one-constraint binary toy") {
  MilpModel m;
  VarId a = m.add_binary("a");
  VarId b = m.add_binary("b");
  m.add_constraint(LinExpr(a) + LinExpr(b), Sense::Le, 1.0);
  m.set_objective(ObjSense::Maximize, LinExpr(a) + LinExpr(b));
  SolveResult r = solve_milp(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("milp: knapsack optimum matches the exhaustive oracle") {
  const double values[3] = {6, 10, 12};
  const double weights[3] = {1, 2, 3};
  const double cap = 5;

  // Exhaustive oracle over the 8 subsets, written before the solver ran.
  double best = 0.0;
  for (unsigned mask = 0; mask < 8; ++mask) {
    double v = 0.0, w = 0.0;
    for (int j = 0; j < 3; ++j) {
      if (mask >> j & 1u) {
        v += values[j];
        w += weights[j];
      }
    }
    if (w <= cap) best = std::max(best, v);
  }
  CHECK(best == 22.0);

  MilpModel m;
  std::vector<VarId> z;
  LinExpr wsum, vsum;
  for (int j = 0; j < 3; ++j) {
    z.push_back(m.add_binary("z" + std::to_string(j)));
    wsum.add(z.back(), weights[j]);
    vsum.add(z.back(), values[j]);
  }
  m.add_constraint(wsum, Sense::Le, cap);
  m.set_objective(ObjSense::Maximize, vsum);
  SolveResult r = solve_milp(m);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(best).epsilon(1e-9));
  CHECK(r.value(z[1]) == doctest::Approx(1.0));
  CHECK(r.value(z[2]) == doctest::Approx(1.0));
  CHECK(std::abs(r.objective - r.best_bound) <= 1e-6);
}

TEST_CASE("milp: all two-binary models match exhaustive enumeration") {
  std::mt19937_64 rng(99173u);
  for (int trial = 0; trial < 200; ++trial) {
    MilpModel m;
    VarId z0 = m.add_binary("z0");
    VarId z1 = m.add_binary("z1");
    int rows = testutil::uniform_int(rng, 0, 3);
    std::vector<std::array<double, 2>> A;
    std::vector<Sense> senses;
    std::vector<double> rhs;
    for (int i = 0; i < rows; ++i) {
      std::array<double, 2> row{testutil::uniform(rng, -3.0, 3.0),
                                testutil::uniform(rng, -3.0, 3.0)};
      Sense s = static_cast<Sense>(testutil::uniform_int(rng, 0, 2));
      double b = testutil::uniform(rng, -2.0, 4.0);
      if (s == Sense::Eq) {
        // Random equalities over binaries are almost never satisfiable;
        // anchor them on a random corner instead.
        int c0 = testutil::uniform_int(rng, 0, 1), c1 = testutil::uniform_int(rng, 0, 1);
        b = row[0] * c0 + row[1] * c1;
      }
      A.push_back(row);
      senses.push_back(s);
      rhs.push_back(b);
      LinExpr e;
      e.add(z0, row[0]);
      e.add(z1, row[1]);
      m.add_constraint(e, s, b);
    }
    double c0 = testutil::uniform(rng, -3.0, 3.0);
    double c1 = testutil::uniform(rng, -3.0, 3.0);
    bool maximize = testutil::uniform_int(rng, 0, 1) == 1;
    LinExpr obj;
    obj.add(z0, c0);
    obj.add(z1, c1);
    m.set_objective(maximize ? ObjSense::Maximize : ObjSense::Minimize, obj);

    // Direct enumeration of the four corners.
    std::optional<double> best;
    for (int v0 = 0; v0 <= 1; ++v0) {
      for (int v1 = 0; v1 <= 1; ++v1) {
        bool ok = true;
        for (std::size_t i = 0; i < A.size(); ++i) {
          double act = A[i][0] * v0 + A[i][1] * v1;
          if (senses[i] == Sense::Le && act > rhs[i] + 1e-9) ok = false;
          if (senses[i] == Sense::Ge && act < rhs[i] - 1e-9) ok = false;
          if (senses[i] == Sense::Eq && std::abs(act - rhs[i]) > 1e-9) ok = false;
        }
        if (!ok) continue;
        double val = c0 * v0 + c1 * v1;
        if (!best || (maximize ? val > *best : val < *best)) best = val;
      }
    }

    SolveResult r = solve_milp(m);
    if (best.has_value()) {
      REQUIRE(r.status == SolveStatus::Optimal);
      CHECK(r.objective == doctest::Approx(*best).epsilon(1e-7));
    } else {
      CHECK(r.status == SolveStatus::Infeasible);
    }
  }
}

TEST_CASE("milp: mixed binary-continuous models match binary enumeration") {
  std::mt19937_64 rng(5511023u);
  for (int trial = 0; trial < 40; ++trial) {
    MilpModel m;
    int nb = testutil::uniform_int(rng, 1, 5);
    int nc = testutil::uniform_int(rng, 1, 3);
    std::vector<VarId> ids;
    for (int j = 0; j < nb; ++j) ids.push_back(m.add_binary("z" + std::to_string(j)));
    for (int j = 0; j < nc; ++j) {
      double a = testutil::uniform(rng, -4.0, 2.0);
      ids.push_back(m.add_continuous(a, a + testutil::uniform(rng, 0.5, 4.0),
                                     "x" + std::to_string(j)));
    }
    int rows = testutil::uniform_int(rng, 1, 4);
    for (int i = 0; i < rows; ++i) {
      LinExpr e;
      double act_mid = 0.0;
      for (std::size_t j = 0; j < ids.size(); ++j) {
        double a = testutil::uniform(rng, -2.0, 2.0);
        e.add(ids[j], a);
        const Variable& v = m.variable(ids[j]);
        act_mid += a * 0.5 * (v.lower + v.upper);
      }
      Sense s = testutil::uniform_int(rng, 0, 1) == 0 ? Sense::Le : Sense::Ge;
      double margin = testutil::uniform(rng, -0.5, 2.5);
      m.add_constraint(e, s, s == Sense::Le ? act_mid + margin : act_mid - margin);
    }
    LinExpr obj;
    for (std::size_t j = 0; j < ids.size(); ++j) obj.add(ids[j], testutil::uniform(rng, -2.0, 2.0));
    m.set_objective(testutil::uniform_int(rng, 0, 1) ? ObjSense::Maximize : ObjSense::Minimize,
                    obj);

    auto expected = enumerate_milp(m);
    SolveResult r = solve_milp(m);
    if (expected.has_value()) {
      REQUIRE(r.status == SolveStatus::Optimal);
      CHECK(r.objective == doctest::Approx(*expected).epsilon(1e-6));
      // The relaxation can only be better than the integer optimum.
      SolveResult relax = solve_lp(m);
      REQUIRE(relax.status == SolveStatus::Optimal);
      if (m.objective_sense() == ObjSense::Minimize) {
        CHECK(relax.objective <= r.objective + 1e-7);
      } else {
        CHECK(relax.objective >= r.objective - 1e-7);
      }
    } else {
      CHECK(r.status == SolveStatus::Infeasible);
    }
  }
}

TEST_CASE("milp: identical inputs give identical results") {
  std::mt19937_64 rng(777u);
  MilpModel m;
  std::vector<VarId> ids;
  for (int j = 0; j < 6; ++j) ids.push_back(m.add_binary("z" + std::to_string(j)));
  for (int j = 0; j < 2; ++j) ids.push_back(m.add_continuous(-1.0, 1.0, "x" + std::to_string(j)));
  for (int i = 0; i < 5; ++i) {
    LinExpr e;
    for (const VarId& v : ids) e.add(v, testutil::uniform(rng, -2.0, 2.0));
    m.add_constraint(e, i % 2 == 0 ? Sense::Le : Sense::Ge, testutil::uniform(rng, -1.0, 3.0));
  }
  LinExpr obj;
  for (const VarId& v : ids) obj.add(v, testutil::uniform(rng, -2.0, 2.0));
  m.set_objective(ObjSense::Minimize, obj);

  SolveResult a = solve_milp(m);
  SolveResult b = solve_milp(m);
  CHECK(a.status == b.status);
  // Bit-identical outcome: exact equality on every reported number except
  // the wall-clock measurement.
  if (a.has_solution()) {
    REQUIRE(b.has_solution());
    CHECK(a.objective == b.objective);
    CHECK(a.best_bound == b.best_bound);
    REQUIRE(a.assignment.size() == b.assignment.size());
    for (int i = 0; i < a.assignment.size(); ++i) {
      CHECK(a.assignment[i] == b.assignment[i]);
    }
  }
  CHECK(a.stats.nodes == b.stats.nodes);
  CHECK(a.stats.simplex_iterations == b.stats.simplex_iterations);
}

TEST_CASE("milp: node limit reports incumbent and honest bound") {
  // A model the solver cannot finish in one node: equal-profit knapsack.
  MilpModel m;
  LinExpr w, v;
  for (int j = 0; j < 12; ++j) {
    VarId z = m.add_binary("z" + std::to_string(j));
    w.add(z, 1.0 + 0.01 * j);
    v.add(z, 1.0);
  }
  m.add_constraint(w, Sense::Le, 6.0);
  m.set_objective(ObjSense::Maximize, v);
  SolveOptions opts;
  opts.node_limit = 1;
  SolveResult r = solve_milp(m, opts);
  CHECK(r.status == SolveStatus::IterLimit);
  // The bound must dominate any feasible value (maximize: upper bound).
  CHECK(r.best_bound >= 5.0);

  SolveResult full = solve_milp(m);
  REQUIRE(full.status == SolveStatus::Optimal);
  CHECK(full.objective == doctest::Approx(5.0).epsilon(1e-9));
  CHECK(full.best_bound >= full.objective - 1e-6);
}

TEST_CASE("milp: completion heuristic can supply the incumbent") {
  // Knapsack with a fractional root relaxation (take z1 whole, 3/4 of z0)
  // where thresholding the relaxation gives the true optimum {z1, z2}.
  MilpModel m;
  VarId z0 = m.add_binary("z0");
  VarId z1 = m.add_binary("z1");
  VarId z2 = m.add_binary("z2");
  m.add_constraint(4.0 * LinExpr(z0) + 3.0 * LinExpr(z1) + 3.0 * LinExpr(z2),
                   Sense::Le, 6.0);
  m.set_objective(ObjSense::Maximize,
                  6.0 * LinExpr(z0) + 5.0 * LinExpr(z1) + 4.0 * LinExpr(z2));
  SolveOptions opts;
  int calls = 0;
  opts.heuristic = [&](const Eigen::VectorXd& relax) {
    ++calls;
    std::vector<std::pair<VarId, double>> fix;
    for (int j = 0; j < 3; ++j) {
      fix.emplace_back(VarId{j}, relax[j] > 0.9 ? 1.0 : 0.0);
    }
    return fix;
  };
  SolveResult r = solve_milp(m, opts);
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(9.0));
  CHECK(r.value(z1) == doctest::Approx(1.0));
  CHECK(r.value(z2) == doctest::Approx(1.0));
  CHECK(calls >= 1);
}

TEST_CASE("backend registry exposes the embedded default") {
  auto names = backend_names();
  CHECK(std::find(names.begin(), names.end(), "embedded") != names.end());
  CHECK_THROWS_AS(backend_solve(MilpModel{}, "no-such-backend"), InputError);

  MilpModel m;
  VarId z = m.add_binary("z");
  m.set_objective(ObjSense::Maximize, 3.0 * LinExpr(z));
  SolveResult r = backend_solve(m, "embedded");
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.objective == doctest::Approx(3.0));
}

TEST_CASE("lp export backend writes a file that re-parses equivalently") {
  MilpModel m;
  VarId k = m.add_continuous(-kInf, kInf, "k");
  VarId zf = m.add_binary("zF");
  VarId u = m.add_continuous(-3.0, 3.0, "uL[3][0]");
  VarId fixed = m.add_continuous(2.5, 2.5, "pin");
  VarId hi = m.add_continuous(-kInf, 7.0, "ceiling");
  LinExpr e = 2.0 * LinExpr(k) - 0.5 * LinExpr(u) + LinExpr(zf);
  m.add_constraint(e, Sense::Le, 4.0, "r0");
  m.add_constraint(LinExpr(k) + LinExpr(fixed), Sense::Ge, -1.5);
  m.add_constraint(LinExpr(u) - LinExpr(hi), Sense::Eq, 0.25);
  LinExpr obj = LinExpr(k) + 0.125 * LinExpr(u);
  obj.set_constant(1.75);
  m.set_objective(ObjSense::Minimize, obj);

  std::ostringstream text;
  write_lp(text, m);
  std::istringstream in(text.str());
  MilpModel parsed = parse_lp(in);
  CHECK(models_equivalent(m, parsed));

  // And the parsed copy solves to the same optimum.
  SolveResult a = solve_milp(m);
  SolveResult b = solve_milp(parsed);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));

  std::string path = "export_roundtrip.lp";
  LpExportBackend backend(path);
  SolveResult c = backend.solve(m, SolveOptions{});
  CHECK(c.objective == doctest::Approx(a.objective).epsilon(1e-9));
  std::ifstream file(path);
  REQUIRE(file.good());
  MilpModel reparsed = parse_lp(file);
  CHECK(models_equivalent(m, reparsed));
}

TEST_CASE("lp parser reports positions on malformed input") {
  std::istringstream missing_sense("Minimize\n obj: x\nSubject To\n r: x + y\nBounds\nEnd\n");
  CHECK_THROWS_AS(parse_lp(missing_sense), ParseError);
  std::istringstream no_section("Hello\n");
  CHECK_THROWS_AS(parse_lp(no_section), ParseError);
  try {
    std::istringstream bad("Minimize\n obj: x\nSubject To\n r: x <= \nBounds\nEnd\n");
    parse_lp(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& err) {
    CHECK(err.line >= 4);
  }
}
