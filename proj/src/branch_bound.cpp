#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <set>

#include "simplex.hpp"
#include "stlgame/milp.hpp"

namespace stlgame::milp {

namespace {

using detail::Basis;
using detail::BoundedSimplex;
using detail::Clock;
using detail::LpStatus;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

long long budget_of(long long limit) {
  return limit < 0 ? std::numeric_limits<long long>::max() : limit;
}

Clock::time_point deadline_of(const SolveOptions& options) {
  if (options.time_limit_seconds < 0) return Clock::time_point::max();
  return Clock::now() +
         std::chrono::duration_cast<Clock::duration>(
             std::chrono::duration<double>(options.time_limit_seconds));
}

/// Converts the internal minimize-form objective to the model's sense.
double external_obj(const MilpModel& model, double min_obj) {
  double v = model.objective_sense() == ObjSense::Maximize ? -min_obj : min_obj;
  return v + model.objective_offset();
}

SolveStatus map_status(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return SolveStatus::Optimal;
    case LpStatus::Infeasible: return SolveStatus::Infeasible;
    case LpStatus::Unbounded: return SolveStatus::Unbounded;
    case LpStatus::TimeLimit: return SolveStatus::TimeLimit;
    default: return SolveStatus::IterLimit;
  }
}

/// One tightening sweep over all constraints; returns false on proven
/// infeasibility. Bounds are tightened in place; binaries additionally snap
/// to the integer lattice.
bool propagate_bounds(const MilpModel& model, std::vector<double>& lower,
                      std::vector<double>& upper, double feas_tol) {
  const auto& vars = model.variables();
  for (int pass = 0; pass < 4; ++pass) {
    bool changed = false;
    for (const LinConstraint& c : model.constraints()) {
      // Work on a ≤ and/or a ≥ view of the row.
      for (int view = 0; view < 2; ++view) {
        bool as_le = view == 0;
        if (c.sense == Sense::Le && !as_le) continue;
        if (c.sense == Sense::Ge && as_le) continue;
        // In the ≤ view we need the activity minimum; flip signs for ≥.
        double sign = as_le ? 1.0 : -1.0;
        double rhs = sign * c.rhs;
        double min_act = 0.0;
        int inf_terms = 0;
        int inf_at = -1;
        for (std::size_t k = 0; k < c.terms.size(); ++k) {
          double a = sign * c.terms[k].coeff;
          int j = c.terms[k].var.index;
          double contrib = a > 0 ? a * lower[static_cast<std::size_t>(j)]
                                 : a * upper[static_cast<std::size_t>(j)];
          if (!std::isfinite(contrib)) {
            ++inf_terms;
            inf_at = static_cast<int>(k);
          } else {
            min_act += contrib;
          }
        }
        if (inf_terms == 0 && min_act > rhs + feas_tol) return false;
        if (inf_terms > 1) continue;
        for (std::size_t k = 0; k < c.terms.size(); ++k) {
          if (inf_terms == 1 && static_cast<int>(k) != inf_at) continue;
          double a = sign * c.terms[k].coeff;
          int j = c.terms[k].var.index;
          double own = a > 0 ? a * lower[static_cast<std::size_t>(j)]
                             : a * upper[static_cast<std::size_t>(j)];
          double rest = inf_terms == 1 ? min_act : min_act - own;
          if (!std::isfinite(rest)) continue;
          double limit = (rhs - rest) / a;
          std::size_t sj = static_cast<std::size_t>(j);
          if (a > 0) {
            double new_up = limit;
            if (vars[sj].kind == VarKind::Binary) new_up = std::floor(new_up + 1e-6);
            if (new_up < upper[sj] - 1e-12) {
              upper[sj] = std::max(new_up, lower[sj]);
              if (new_up < lower[sj] - feas_tol) return false;
              changed = true;
            }
          } else {
            double new_lo = limit;
            if (vars[sj].kind == VarKind::Binary) new_lo = std::ceil(new_lo - 1e-6);
            if (new_lo > lower[sj] + 1e-12) {
              lower[sj] = std::min(new_lo, upper[sj]);
              if (new_lo > upper[sj] + feas_tol) return false;
              changed = true;
            }
          }
        }
      }
    }
    if (!changed) break;
  }
  return true;
}

struct FixChain {
  int var;
  double value;
  std::shared_ptr<const FixChain> parent;
};

struct Node {
  double bound;  // minimize-form LP bound inherited from the parent
  long long id;
  std::shared_ptr<const FixChain> fixes;
  std::shared_ptr<const Basis> warm;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id < b.id;
  }
};

}  // namespace

SolveResult solve_lp(const MilpModel& model, const SolveOptions& options) {
  BoundedSimplex simplex(model);
  simplex.set_feasibility_tol(options.feasibility_tol);
  std::vector<double> lower(static_cast<std::size_t>(model.num_variables()));
  std::vector<double> upper(lower.size());
  for (int j = 0; j < model.num_variables(); ++j) {
    lower[static_cast<std::size_t>(j)] = model.variables()[static_cast<std::size_t>(j)].lower;
    upper[static_cast<std::size_t>(j)] = model.variables()[static_cast<std::size_t>(j)].upper;
  }

  auto t0 = Clock::now();
  Basis basis;
  detail::LpOutcome out = simplex.solve(lower, upper, basis,
                                        budget_of(options.iteration_limit),
                                        deadline_of(options));
  SolveResult result;
  result.status = map_status(out.status);
  result.stats.simplex_iterations = out.iterations;
  result.stats.nodes = 0;
  result.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  bool minimize = model.objective_sense() == ObjSense::Minimize;
  if (out.status == LpStatus::Optimal) {
    const auto& v = simplex.values();
    result.assignment = Eigen::Map<const Eigen::VectorXd>(v.data(), model.num_variables());
    result.objective = external_obj(model, simplex.min_objective());
    result.best_bound = result.objective;
  } else if (out.status == LpStatus::Unbounded) {
    result.objective = minimize ? -kInf : kInf;
    result.best_bound = result.objective;
  } else if (out.status == LpStatus::Infeasible) {
    result.objective = kNaN;
    result.best_bound = minimize ? kInf : -kInf;
  } else {
    result.objective = kNaN;
    result.best_bound = minimize ? -kInf : kInf;
  }
  return result;
}

SolveResult solve_milp(const MilpModel& model, const SolveOptions& options) {
  const auto t0 = Clock::now();
  const auto deadline = deadline_of(options);
  const bool minimize = model.objective_sense() == ObjSense::Minimize;
  const int n = model.num_variables();

  std::vector<int> binaries;
  for (int j = 0; j < n; ++j) {
    if (model.variables()[static_cast<std::size_t>(j)].kind == VarKind::Binary) {
      binaries.push_back(j);
    }
  }

  std::vector<double> root_lower(static_cast<std::size_t>(n)), root_upper(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    root_lower[static_cast<std::size_t>(j)] = model.variables()[static_cast<std::size_t>(j)].lower;
    root_upper[static_cast<std::size_t>(j)] = model.variables()[static_cast<std::size_t>(j)].upper;
  }

  BoundedSimplex simplex(model);
  simplex.set_feasibility_tol(options.feasibility_tol);

  SolveResult result;
  result.stats.nodes = 0;
  long long iter_budget = budget_of(options.iteration_limit);
  long long node_budget = budget_of(options.node_limit);

  double incumbent_obj = kInf;  // minimize form
  Eigen::VectorXd incumbent;
  // Lowest bound discarded by the gap test; the final proven bound cannot
  // claim more than this.
  double gap_pruned_min = kInf;

  std::multiset<Node, NodeOrder> open;
  long long next_id = 0;
  open.insert(Node{-kInf, next_id++, nullptr, nullptr});

  auto finish = [&](SolveStatus status, double bound) {
    result.status = status;
    if (incumbent.size() > 0) {
      result.assignment = incumbent;
      result.objective = external_obj(model, incumbent_obj);
    } else {
      result.objective = kNaN;
    }
    double b = std::min(bound, gap_pruned_min);
    if (incumbent.size() > 0) b = std::min(b, incumbent_obj);
    result.best_bound = external_obj(model, b);
    result.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return result;
  };

  auto gap_ok = [&](double bound) {
    if (incumbent.size() == 0) return false;
    double gap = incumbent_obj - bound;
    return gap <= options.mip_gap_abs ||
           gap <= options.mip_gap_rel * std::max(1e-10, std::abs(incumbent_obj));
  };

  std::vector<double> lower, upper;
  while (!open.empty()) {
    Node node = *open.begin();
    open.erase(open.begin());

    // All remaining nodes have bounds at least as high: optimality proven
    // within the configured gap.
    if (gap_ok(node.bound)) {
      return finish(SolveStatus::Optimal, node.bound);
    }
    if (result.stats.nodes >= node_budget) {
      // Node exhaustion reports as the iteration-limit status.
      return finish(SolveStatus::IterLimit, node.bound);
    }
    if (deadline != Clock::time_point::max() && Clock::now() > deadline) {
      return finish(SolveStatus::TimeLimit, node.bound);
    }
    ++result.stats.nodes;

    lower = root_lower;
    upper = root_upper;
    for (const FixChain* f = node.fixes.get(); f != nullptr; f = f->parent.get()) {
      std::size_t sj = static_cast<std::size_t>(f->var);
      lower[sj] = f->value;
      upper[sj] = f->value;
    }
    if (!propagate_bounds(model, lower, upper, options.feasibility_tol)) continue;

    Basis basis = node.warm ? *node.warm : Basis{};
    detail::LpOutcome lp =
        simplex.solve(lower, upper, basis, iter_budget, deadline);
    iter_budget -= lp.iterations;
    result.stats.simplex_iterations += lp.iterations;

    if (lp.status == LpStatus::Infeasible) continue;
    if (lp.status == LpStatus::Unbounded) {
      // An unbounded relaxation at any node makes the problem unbounded or
      // infeasible; report the stronger signal seen.
      result.status = SolveStatus::Unbounded;
      result.objective = minimize ? -kInf : kInf;
      result.best_bound = result.objective;
      result.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
      return result;
    }
    if (lp.status == LpStatus::TimeLimit) return finish(SolveStatus::TimeLimit, node.bound);
    if (lp.status != LpStatus::Optimal) return finish(SolveStatus::IterLimit, node.bound);

    double obj = simplex.min_objective();
    if (incumbent.size() > 0) {
      double gap = incumbent_obj - obj;
      if (gap <= options.mip_gap_abs ||
          gap <= options.mip_gap_rel * std::max(1e-10, std::abs(incumbent_obj))) {
        gap_pruned_min = std::min(gap_pruned_min, obj);
        continue;
      }
    }

    const auto& vals = simplex.values();
    int branch_var = -1;
    double branch_frac = options.integrality_tol;
    for (int j : binaries) {
      double v = vals[static_cast<std::size_t>(j)];
      double frac = std::abs(v - std::round(v));
      if (frac > branch_frac) {
        branch_frac = frac;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      // Integral: candidate incumbent.
      if (obj < incumbent_obj) {
        incumbent_obj = obj;
        incumbent = Eigen::Map<const Eigen::VectorXd>(vals.data(), n);
      }
      continue;
    }

    auto warm = std::make_shared<Basis>(std::move(basis));
    double v = vals[static_cast<std::size_t>(branch_var)];
    // Explore the side the relaxation leans toward first (lower id wins
    // best-bound ties, so it is processed first).
    double first = v >= 0.5 ? 1.0 : 0.0;
    for (double fix : {first, 1.0 - first}) {
      Node child;
      child.bound = obj;
      child.id = next_id++;
      child.fixes = std::make_shared<FixChain>(FixChain{branch_var, fix, node.fixes});
      child.warm = warm;
      open.insert(std::move(child));
    }

    // Completion heuristic: propose binary fixings from the relaxation,
    // fix them, re-solve, and adopt an integral improving completion.
    if (options.heuristic &&
        (result.stats.nodes == 1 ||
         (incumbent.size() == 0 && result.stats.nodes % 64 == 0))) {
      Eigen::VectorXd relax = Eigen::Map<const Eigen::VectorXd>(vals.data(), n);
      auto fixings = options.heuristic(relax);
      if (!fixings.empty()) {
        std::vector<double> hl = lower, hu = upper;
        bool sane = true;
        for (const auto& [var, value] : fixings) {
          if (!var.valid() || var.index >= n) {
            sane = false;
            break;
          }
          std::size_t sj = static_cast<std::size_t>(var.index);
          if (value < hl[sj] - 1e-9 || value > hu[sj] + 1e-9) {
            sane = false;  // conflicts with the node: skip silently
            break;
          }
          hl[sj] = value;
          hu[sj] = value;
        }
        if (sane && propagate_bounds(model, hl, hu, options.feasibility_tol)) {
          Basis hb = *warm;
          detail::LpOutcome hp = simplex.solve(hl, hu, hb, iter_budget, deadline);
          iter_budget -= hp.iterations;
          result.stats.simplex_iterations += hp.iterations;
          if (hp.status == LpStatus::Optimal) {
            const auto& hv = simplex.values();
            bool integral = true;
            for (int j : binaries) {
              double bv = hv[static_cast<std::size_t>(j)];
              if (std::abs(bv - std::round(bv)) > options.integrality_tol) {
                integral = false;
                break;
              }
            }
            double hobj = simplex.min_objective();
            if (integral && hobj < incumbent_obj) {
              incumbent_obj = hobj;
              incumbent = Eigen::Map<const Eigen::VectorXd>(hv.data(), n);
            }
          }
        }
      }
    }
  }

  if (incumbent.size() > 0) {
    return finish(SolveStatus::Optimal, kInf);
  }
  return finish(SolveStatus::Infeasible, kInf);
}

}  // namespace stlgame::milp
