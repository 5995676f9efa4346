#include "simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stlgame::milp::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;     // minimum acceptable pivot magnitude
constexpr double kDropTol = 1e-11;     // ratio-test entries below this are noise
constexpr double kRatioTieTol = 1e-9;  // blocks within this of the min ratio tie
constexpr int kEtaLimit = 120;         // refactorize after this many pivots
constexpr int kStallLimit = 400;       // degenerate steps before Bland's rule

}  // namespace

BoundedSimplex::BoundedSimplex(const MilpModel& model) {
  n_ = model.num_variables();
  m_ = model.num_constraints();
  cols_.assign(static_cast<std::size_t>(n_), {});
  log_lo_.assign(static_cast<std::size_t>(m_), -kInf);
  log_up_.assign(static_cast<std::size_t>(m_), kInf);

  const auto& cons = model.constraints();
  for (int i = 0; i < m_; ++i) {
    const LinConstraint& c = cons[static_cast<std::size_t>(i)];
    for (const LinTerm& t : c.terms) {
      cols_[static_cast<std::size_t>(t.var.index)].emplace_back(i, t.coeff);
    }
    switch (c.sense) {
      case Sense::Le: log_up_[static_cast<std::size_t>(i)] = c.rhs; break;
      case Sense::Ge: log_lo_[static_cast<std::size_t>(i)] = c.rhs; break;
      case Sense::Eq:
        log_lo_[static_cast<std::size_t>(i)] = c.rhs;
        log_up_[static_cast<std::size_t>(i)] = c.rhs;
        break;
    }
  }

  cmin_ = model.objective_coeffs();
  if (model.objective_sense() == ObjSense::Maximize) {
    for (double& c : cmin_) c = -c;
  }
  for (double c : cmin_) cost_scale_ = std::max(cost_scale_, std::abs(c));
}

double BoundedSimplex::column_dot(const Eigen::VectorXd& y, int j) const {
  if (j >= n_) return -y[j - n_];
  double s = 0.0;
  for (const auto& [row, coeff] : cols_[static_cast<std::size_t>(j)]) {
    s += coeff * y[row];
  }
  return s;
}

void BoundedSimplex::scatter_column(int j, double scale, Eigen::VectorXd& out) const {
  if (j >= n_) {
    out[j - n_] -= scale;
    return;
  }
  for (const auto& [row, coeff] : cols_[static_cast<std::size_t>(j)]) {
    out[row] += scale * coeff;
  }
}

void BoundedSimplex::cold_basis() {
  basic_.resize(static_cast<std::size_t>(m_));
  stat_.assign(static_cast<std::size_t>(n_ + m_), VStat::AtLower);
  for (int i = 0; i < m_; ++i) {
    basic_[static_cast<std::size_t>(i)] = n_ + i;
    stat_[static_cast<std::size_t>(n_ + i)] = VStat::Basic;
  }
  for (int j = 0; j < n_; ++j) {
    if (std::isfinite(lo(j))) {
      stat_[static_cast<std::size_t>(j)] = VStat::AtLower;
    } else if (std::isfinite(up(j))) {
      stat_[static_cast<std::size_t>(j)] = VStat::AtUpper;
    } else {
      stat_[static_cast<std::size_t>(j)] = VStat::Free;
    }
  }
}

void BoundedSimplex::load_start(Basis& basis) {
  bool usable = basis.basic.size() == static_cast<std::size_t>(m_) &&
                basis.stat.size() == static_cast<std::size_t>(n_ + m_);
  if (usable) {
    basic_ = basis.basic;
    stat_ = basis.stat;
    // Bounds may have moved since the basis was recorded; re-anchor nonbasic
    // states to bounds that still exist.
    for (int j = 0; j < n_ + m_; ++j) {
      VStat& s = stat_[static_cast<std::size_t>(j)];
      if (s == VStat::Basic) continue;
      if (s == VStat::AtLower && !std::isfinite(lo(j))) {
        s = std::isfinite(up(j)) ? VStat::AtUpper : VStat::Free;
      } else if (s == VStat::AtUpper && !std::isfinite(up(j))) {
        s = std::isfinite(lo(j)) ? VStat::AtLower : VStat::Free;
      }
    }
  } else {
    cold_basis();
  }
  if (!factorize()) {
    cold_basis();
    if (!factorize()) {
      throw InternalError("simplex: slack basis failed to factorize");
    }
  }
  recompute_basics();
}

bool BoundedSimplex::factorize() {
  etas_.clear();
  if (m_ == 0) return true;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
  for (int p = 0; p < m_; ++p) {
    int j = basic_[static_cast<std::size_t>(p)];
    if (j >= n_) {
      B(j - n_, p) = -1.0;
    } else {
      for (const auto& [row, coeff] : cols_[static_cast<std::size_t>(j)]) {
        B(row, p) = coeff;
      }
    }
  }
  lu_.compute(B);
  double mx = lu_.matrixLU().diagonal().cwiseAbs().maxCoeff();
  double mn = lu_.matrixLU().diagonal().cwiseAbs().minCoeff();
  return mn > 1e-13 * std::max(1.0, mx);
}

void BoundedSimplex::ftran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v);
  for (const Eta& e : etas_) {
    double t = v[e.r] / e.w[e.r];
    if (t != 0.0) v -= t * e.w;
    v[e.r] = t;
  }
}

void BoundedSimplex::btran(Eigen::VectorXd& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double s = it->w.dot(v);
    v[it->r] = (v[it->r] - (s - it->w[it->r] * v[it->r])) / it->w[it->r];
  }
  v = lu_.transpose().solve(v);
}

void BoundedSimplex::recompute_basics() {
  xval_.assign(static_cast<std::size_t>(n_ + m_), 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    switch (stat_[static_cast<std::size_t>(j)]) {
      case VStat::AtLower: xval_[static_cast<std::size_t>(j)] = lo(j); break;
      case VStat::AtUpper: xval_[static_cast<std::size_t>(j)] = up(j); break;
      case VStat::Free: xval_[static_cast<std::size_t>(j)] = 0.0; break;
      case VStat::Basic: break;
    }
  }
  if (m_ == 0) return;
  Eigen::VectorXd t = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < n_ + m_; ++j) {
    if (stat_[static_cast<std::size_t>(j)] == VStat::Basic) continue;
    double v = xval_[static_cast<std::size_t>(j)];
    if (v != 0.0) scatter_column(j, v, t);
  }
  ftran(t);
  for (int p = 0; p < m_; ++p) {
    xval_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(p)])] = -t[p];
  }
}

double BoundedSimplex::total_infeasibility() const {
  double s = 0.0;
  for (int p = 0; p < m_; ++p) {
    int j = basic_[static_cast<std::size_t>(p)];
    double v = xval_[static_cast<std::size_t>(j)];
    if (v < lo(j)) s += lo(j) - v;
    if (v > up(j)) s += v - up(j);
  }
  return s;
}

double BoundedSimplex::min_objective() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) {
    s += cmin_[static_cast<std::size_t>(j)] * xval_[static_cast<std::size_t>(j)];
  }
  return s;
}

LpStatus BoundedSimplex::run_phase(bool phase1, long long budget, long long& used,
                                   Clock::time_point deadline) {
  const double dtol = 1e-9 * (phase1 ? 1.0 : cost_scale_);
  bool bland = false;
  int stall = 0;
  int refresh_rounds = 0;
  double last_progress_obj = phase1 ? total_infeasibility() : min_objective();
  std::vector<char> banned(static_cast<std::size_t>(n_ + m_), 0);
  bool any_banned = false;

  // Phase 2 assumes a primal-feasible start; tell the caller to rerun
  // phase 1 if that assumption broke (e.g. after a cold refactorization).
  if (!phase1 && total_infeasibility() > feas_tol_) return LpStatus::Restart;

  Eigen::VectorXd d(m_), y(m_), w(m_);

  while (true) {
    if (used >= budget) return LpStatus::IterLimit;
    if ((used & 0xff) == 0 && deadline != Clock::time_point::max() &&
        Clock::now() > deadline) {
      return LpStatus::TimeLimit;
    }

    // Objective gradient over basis positions. Phase 1 minimizes the total
    // bound violation of the basic variables; its gradient is the violation
    // direction sign per basic.
    bool any_infeasible = false;
    for (int p = 0; p < m_; ++p) {
      int j = basic_[static_cast<std::size_t>(p)];
      if (phase1) {
        double v = xval_[static_cast<std::size_t>(j)];
        if (v < lo(j) - feas_tol_) {
          d[p] = -1.0;
          any_infeasible = true;
        } else if (v > up(j) + feas_tol_) {
          d[p] = 1.0;
          any_infeasible = true;
        } else {
          d[p] = 0.0;
        }
      } else {
        d[p] = j < n_ ? cmin_[static_cast<std::size_t>(j)] : 0.0;
      }
    }
    if (phase1 && !any_infeasible) return LpStatus::Optimal;
    y = d;
    btran(y);

    // Pricing: Dantzig's most-negative rule, Bland's lowest-index rule when
    // fighting a stall. Lowest index breaks Dantzig ties for determinism.
    int enter = -1;
    int dir = 0;
    double best = dtol;
    for (int j = 0; j < n_ + m_; ++j) {
      VStat s = stat_[static_cast<std::size_t>(j)];
      if (s == VStat::Basic || banned[static_cast<std::size_t>(j)]) continue;
      if (lo(j) == up(j)) continue;  // fixed: can never move
      double cj = (!phase1 && j < n_) ? cmin_[static_cast<std::size_t>(j)] : 0.0;
      double red = cj - column_dot(y, j);
      int cand_dir = 0;
      if ((s == VStat::AtLower || s == VStat::Free) && red < -dtol) {
        cand_dir = 1;
      } else if ((s == VStat::AtUpper || s == VStat::Free) && red > dtol) {
        cand_dir = -1;
      }
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        break;
      }
      if (std::abs(red) > best) {
        best = std::abs(red);
        enter = j;
        dir = cand_dir;
      }
    }
    if (enter < 0) {
      if (any_banned) {
        // Only numerically rejected candidates remain: refresh and retry,
        // but give up rather than loop if refreshing does not help.
        if (++refresh_rounds > 2) return LpStatus::IterLimit;
        std::fill(banned.begin(), banned.end(), 0);
        any_banned = false;
        factorize();
        recompute_basics();
        continue;
      }
      return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;
    }

    w.setZero(m_);
    scatter_column(enter, 1.0, w);
    ftran(w);

    // Ratio test: step length theta >= 0 moving `enter` in direction `dir`;
    // the basic at position p moves at rate -dir*w[p]. Feasible basics block
    // at the bound they would cross. In phase 1, basics outside a bound
    // block exactly where they regain it (the first breakpoint of the
    // piecewise-linear infeasibility sum); basics moving deeper into
    // violation never block, the gradient already priced that in.
    double own_range = up(enter) - lo(enter);
    double theta_min = std::isfinite(own_range) ? own_range : kInf;
    int block = -1;  // -1 means the entering variable's own bound flip
    for (int p = 0; p < m_; ++p) {
      if (std::abs(w[p]) < kDropTol) continue;
      int j = basic_[static_cast<std::size_t>(p)];
      double v = xval_[static_cast<std::size_t>(j)];
      double rate = -dir * w[p];
      double theta = kInf;
      if (phase1 && v < lo(j) - feas_tol_) {
        if (rate > 0.0) theta = (lo(j) - v) / rate;
      } else if (phase1 && v > up(j) + feas_tol_) {
        if (rate < 0.0) theta = (up(j) - v) / rate;
      } else if (rate > 0.0) {
        if (std::isfinite(up(j))) theta = (up(j) - v) / rate;
      } else {
        if (std::isfinite(lo(j))) theta = (lo(j) - v) / rate;
      }
      if (theta == kInf) continue;
      if (theta < 0.0) theta = 0.0;
      if (theta < theta_min - kRatioTieTol) {
        theta_min = theta;
        block = p;
      } else if (theta <= theta_min + kRatioTieTol && block >= 0) {
        // Tie between blocking basics: prefer the numerically strongest
        // pivot; under Bland's rule the lowest leaving variable index.
        int cur = basic_[static_cast<std::size_t>(block)];
        bool take = bland ? j < cur
                          : std::abs(w[p]) > std::abs(w[block]) + 1e-12;
        if (take) {
          block = p;
          theta_min = std::min(theta_min, theta);
        }
      }
      // Ties against the entering variable's own flip keep the flip: it is
      // cheaper (no basis change) and any tied basic stays within tolerance.
    }

    if (theta_min == kInf) {
      if (!phase1) return LpStatus::Unbounded;
      // Descent in a bounded infeasibility sum cannot be unblocked; treat
      // as numerical noise.
      if (!etas_.empty()) {
        factorize();
        recompute_basics();
        continue;
      }
      banned[static_cast<std::size_t>(enter)] = 1;
      any_banned = true;
      continue;
    }

    if (block >= 0 && std::abs(w[block]) < kPivotTol) {
      // Pivot too small to trust: refresh the factorization, then ban the
      // entering column for this pricing round if the problem persists.
      if (!etas_.empty()) {
        factorize();
        recompute_basics();
        continue;
      }
      banned[static_cast<std::size_t>(enter)] = 1;
      any_banned = true;
      continue;
    }

    ++used;
    if (any_banned) {
      std::fill(banned.begin(), banned.end(), 0);
      any_banned = false;
    }
    refresh_rounds = 0;

    // Apply the step.
    double theta = theta_min;
    if (theta != 0.0) {
      for (int p = 0; p < m_; ++p) {
        if (w[p] == 0.0) continue;
        xval_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(p)])] -=
            dir * theta * w[p];
      }
      xval_[static_cast<std::size_t>(enter)] += dir * theta;
    }

    if (block < 0) {
      // Bound flip: snap exactly onto the opposite bound.
      stat_[static_cast<std::size_t>(enter)] =
          dir > 0 ? VStat::AtUpper : VStat::AtLower;
      xval_[static_cast<std::size_t>(enter)] = dir > 0 ? up(enter) : lo(enter);
    } else {
      int leave = basic_[static_cast<std::size_t>(block)];
      double lv = xval_[static_cast<std::size_t>(leave)];
      // Snap the leaving variable onto the bound it hit.
      if (std::abs(lv - lo(leave)) <= std::abs(lv - up(leave))) {
        stat_[static_cast<std::size_t>(leave)] = VStat::AtLower;
        xval_[static_cast<std::size_t>(leave)] = lo(leave);
      } else {
        stat_[static_cast<std::size_t>(leave)] = VStat::AtUpper;
        xval_[static_cast<std::size_t>(leave)] = up(leave);
      }
      stat_[static_cast<std::size_t>(enter)] = VStat::Basic;
      basic_[static_cast<std::size_t>(block)] = enter;
      etas_.push_back(Eta{block, w});
      if (static_cast<int>(etas_.size()) >= kEtaLimit) {
        if (!factorize()) return LpStatus::Restart;
        recompute_basics();
      }
    }

    // Stall detection drives the Bland's-rule fallback: once the objective
    // stops improving over many pivots we assume cycling and switch to the
    // provably finite rule until progress resumes.
    double obj = phase1 ? total_infeasibility() : min_objective();
    if (obj < last_progress_obj - 1e-12 * (1.0 + std::abs(last_progress_obj))) {
      last_progress_obj = obj;
      stall = 0;
      bland = false;
    } else if (++stall > kStallLimit) {
      bland = true;
    }
  }
}

LpOutcome BoundedSimplex::solve(const std::vector<double>& lower,
                                const std::vector<double>& upper, Basis& basis,
                                long long iteration_budget,
                                Clock::time_point deadline) {
  if (lower.size() != static_cast<std::size_t>(n_) ||
      upper.size() != static_cast<std::size_t>(n_)) {
    throw InternalError("simplex: bounds arrays do not match the model");
  }
  lower_ = &lower;
  upper_ = &upper;

  LpOutcome out;
  for (int j = 0; j < n_; ++j) {
    if (lo(j) > up(j)) {
      // Crossed bounds: trivially infeasible, no pivots required.
      out.status = LpStatus::Infeasible;
      return out;
    }
  }

  load_start(basis);

  long long used = 0;
  LpStatus s = LpStatus::Optimal;
  for (int attempt = 0; attempt < 4; ++attempt) {
    s = LpStatus::Optimal;
    if (total_infeasibility() > feas_tol_) {
      s = run_phase(/*phase1=*/true, iteration_budget, used, deadline);
    }
    if (s == LpStatus::Optimal) {
      s = run_phase(/*phase1=*/false, iteration_budget, used, deadline);
    }
    if (s == LpStatus::Optimal) {
      // Etas accumulate drift; verify feasibility against a fresh
      // factorization and loop back through phase 1 if it broke.
      if (!factorize()) {
        cold_basis();
        factorize();
      }
      recompute_basics();
      if (total_infeasibility() > feas_tol_) continue;
    }
    if (s == LpStatus::Restart) {
      if (!factorize()) {
        cold_basis();
        factorize();
      }
      recompute_basics();
      continue;
    }
    break;
  }
  if (s == LpStatus::Restart) s = LpStatus::IterLimit;
  if (s == LpStatus::Optimal && total_infeasibility() > feas_tol_) {
    // Gave up repairing numerics; report honestly instead of a false optimum.
    s = LpStatus::IterLimit;
  }

  basis.basic = basic_;
  basis.stat = stat_;
  out.status = s;
  out.iterations = used;
  return out;
}

}  // namespace stlgame::milp::detail
