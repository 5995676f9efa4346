#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <vector>

#include "stlgame/milp.hpp"

// Internal solver machinery shared by solve_lp and branch-and-bound.
// Not part of the installed API.

namespace stlgame::milp::detail {

enum class VStat : unsigned char { AtLower, AtUpper, Free, Basic };

/// Restartable basis snapshot: which variable occupies each basis position
/// plus the nonbasic status of every variable (structurals then logicals).
struct Basis {
  std::vector<int> basic;
  std::vector<VStat> stat;
  bool empty() const { return basic.empty() && stat.empty(); }
};

enum class LpStatus {
  Optimal,
  Infeasible,
  Unbounded,
  IterLimit,
  TimeLimit,
  Restart,  // internal: phase 2 lost primal feasibility, rerun phase 1
};

struct LpOutcome {
  LpStatus status = LpStatus::IterLimit;
  long long iterations = 0;
};

using Clock = std::chrono::steady_clock;

/// Bounded-variable primal simplex over a frozen model. Rows are rewritten
/// as a·x − r = 0 with one logical variable r per row carrying the row's
/// sense as bounds, so the right-hand side lives entirely in bounds and the
/// all-logical basis is immediately available as a starting point.
///
/// The caller owns the structural bounds (branch-and-bound tightens them
/// between solves); logical bounds are fixed by the rows. Minimization only;
/// callers handle the objective sense.
class BoundedSimplex {
 public:
  explicit BoundedSimplex(const MilpModel& model);

  /// Minimizes the internal objective subject to rows and the given
  /// structural bounds. `basis`, when non-empty, seeds the start point and
  /// is overwritten with the final basis. Two-phase: a composite
  /// infeasibility phase first whenever the start point violates bounds.
  LpOutcome solve(const std::vector<double>& lower, const std::vector<double>& upper,
                  Basis& basis, long long iteration_budget, Clock::time_point deadline);

  /// Objective in minimize form (no offset), valid after an Optimal solve.
  double min_objective() const;
  /// Value of every variable, structurals first (size n + m).
  const std::vector<double>& values() const { return xval_; }
  int num_structural() const { return n_; }

  void set_feasibility_tol(double tol) { feas_tol_ = tol; }

 private:
  struct Eta {
    int r;
    Eigen::VectorXd w;
  };

  double lo(int j) const { return j < n_ ? (*lower_)[j] : log_lo_[j - n_]; }
  double up(int j) const { return j < n_ ? (*upper_)[j] : log_up_[j - n_]; }

  void load_start(Basis& basis);
  bool factorize();
  void cold_basis();
  void ftran(Eigen::VectorXd& v) const;
  void btran(Eigen::VectorXd& v) const;
  void recompute_basics();
  double column_dot(const Eigen::VectorXd& y, int j) const;
  void scatter_column(int j, double scale, Eigen::VectorXd& out) const;
  double total_infeasibility() const;

  // One simplex phase; phase1 selects the composite-infeasibility objective.
  LpStatus run_phase(bool phase1, long long budget, long long& used,
                     Clock::time_point deadline);

  int n_ = 0;  // structural variables
  int m_ = 0;  // rows == logical variables
  std::vector<std::vector<std::pair<int, double>>> cols_;  // structural columns
  std::vector<double> cmin_;                               // size n, minimize form
  std::vector<double> log_lo_, log_up_;                    // logical bounds
  double cost_scale_ = 1.0;

  const std::vector<double>* lower_ = nullptr;  // structural bounds (caller's)
  const std::vector<double>* upper_ = nullptr;

  std::vector<int> basic_;      // size m
  std::vector<VStat> stat_;     // size n + m
  std::vector<double> xval_;    // size n + m
  Eigen::PartialPivLU<Eigen::MatrixXd> lu_;
  std::vector<Eta> etas_;
  double feas_tol_ = 1e-7;
};

}  // namespace stlgame::milp::detail
