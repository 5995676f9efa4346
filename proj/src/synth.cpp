#include "stlgame/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "stlgame/numfmt.hpp"

namespace stlgame::synth {

using enc::BoolMode;
using enc::Channel;
using enc::EncodingContext;
using enc::RhoMode;
using milp::LinExpr;
using milp::MilpModel;
using milp::ObjSense;
using milp::Sense;
using milp::SolveResult;
using milp::SolveStatus;
using milp::VarId;
using stl::Formula;
using stl::FormulaPtr;

const char* to_string(Mode m) {
  return m == Mode::Cooperative ? "cooperative" : "antagonistic";
}

const char* to_string(SynthStatus s) {
  switch (s) {
    case SynthStatus::Success: return "success";
    case SynthStatus::Infeasible: return "infeasible";
    case SynthStatus::IterationLimit: return "iteration-limit";
  }
  return "?";
}

namespace {

constexpr double kDedupTol = 1e-9;
// Monitor-side admissibility slack for the state box, matching the input
// slack dyn::simulate grants solver-produced sequences.
constexpr double kStateSlack = 1e-6;

// Uniform double in [lo, hi) from raw engine bits, so candidate draws are
// identical across platforms and standard libraries.
double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double grid_value(double lo, double up, int levels, int level) {
  if (levels <= 1 || up == lo) return (lo + up) / 2.0;
  return lo + (up - lo) * static_cast<double>(level) / static_cast<double>(levels - 1);
}

int nearest_level(double v, double lo, double up, int levels) {
  if (levels <= 1 || up == lo) return 0;
  const double x = (v - lo) / (up - lo) * static_cast<double>(levels - 1);
  return static_cast<int>(clamp(std::lround(x), 0, levels - 1));
}

// The loader validates an explicit noninterfering sequence, but the
// implicit zero default can still sit outside an origin-excluding box.
void check_fallback(const dyn::Scenario& sc) {
  for (const Eigen::VectorXd& u : sc.noninterfering_or_zero()) {
    if (!sc.follower_bounds.contains(u, 1e-9)) {
      throw InputError("the fallback follower input lies outside the follower bounds; "
                       "set noninterfering_input explicitly");
    }
  }
}

void check_config(const SynthConfig& cfg) {
  if (cfg.init_candidates < 0) throw ConfigError("init_candidates must be >= 0");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (!(cfg.cegis_tol > 0.0)) throw ConfigError("cegis_tol must be positive");
  if (cfg.verify_samples < 0) throw ConfigError("verify_samples must be >= 0");
  if (cfg.leader_grid_levels == 1 || cfg.follower_grid_levels == 1) {
    throw ConfigError("grid restrictions need at least 2 levels");
  }
}

bool states_in_box(const dyn::Scenario& sc, const stl::Trace& tr) {
  for (const Eigen::VectorXd& x : tr.states) {
    if (!sc.state_bounds.contains(x, kStateSlack)) return false;
  }
  return true;
}

bool sequences_close(const std::vector<Eigen::VectorXd>& a,
                     const std::vector<Eigen::VectorXd>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].size() != b[t].size()) return false;
    if (a[t].size() > 0 && (a[t] - b[t]).lpNorm<Eigen::Infinity>() > tol) return false;
  }
  return true;
}

// Random follower sequence; components snap to the falsifier grid when one
// is configured, so every candidate is reachable by the grid falsifier.
std::vector<Eigen::VectorXd> draw_sequence(std::mt19937_64& rng, const dyn::BoundsBox& box,
                                           int N, int grid_levels) {
  std::vector<Eigen::VectorXd> u;
  u.reserve(static_cast<std::size_t>(N));
  for (int t = 0; t < N; ++t) {
    Eigen::VectorXd v(box.dim());
    for (int j = 0; j < box.dim(); ++j) {
      v[j] = uniform(rng, box.lower[j], box.upper[j]);
      if (grid_levels > 0) {
        v[j] = grid_value(box.lower[j], box.upper[j], grid_levels,
                          nearest_level(v[j], box.lower[j], box.upper[j], grid_levels));
      }
    }
    u.push_back(std::move(v));
  }
  return u;
}

// Input sequence from a solution vector, clamped into its box (solver
// round-off can sit a hair outside).
std::vector<Eigen::VectorXd> read_sequence(const Eigen::VectorXd& assignment,
                                           const std::vector<std::vector<VarId>>& vars,
                                           const dyn::BoundsBox& box) {
  std::vector<Eigen::VectorXd> u;
  u.reserve(vars.size());
  for (const auto& row : vars) {
    Eigen::VectorXd v(static_cast<int>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j) {
      v[static_cast<int>(j)] = clamp(assignment[row[j].index], box.lower[static_cast<int>(j)],
                                     box.upper[static_cast<int>(j)]);
    }
    u.push_back(std::move(v));
  }
  return u;
}

std::vector<Eigen::VectorXd> follower_from_result(const EncodingContext& ctx,
                                                  const SolveResult& r,
                                                  const dyn::Scenario& sc) {
  if (sc.system.m_F() == 0) return dyn::zero_inputs(0, sc.N);
  return read_sequence(r.assignment, ctx.follower_vars(), sc.follower_bounds);
}

SolveResult run_solver(const MilpModel& model, const SynthConfig& cfg,
                       milp::CompletionHeuristic heuristic) {
  milp::SolveOptions opts = cfg.solver;
  if (cfg.use_heuristic && heuristic) opts.heuristic = std::move(heuristic);
  return milp::backend_solve(model, cfg.backend, opts);
}

// Leader effort under the same measure the MILPs carry: tangent-relaxed
// squares, or the exact L1 norm.
double milp_measure_effort(const dyn::Scenario& sc, const std::vector<Eigen::VectorXd>& u_L) {
  double eff = 0.0;
  for (const Eigen::VectorXd& u : u_L) {
    for (int j = 0; j < sc.system.m_L(); ++j) {
      eff += sc.cost.norm == dyn::EffortNorm::SquaredPwl
                 ? enc::pwl_square_value(u[j], sc.leader_bounds.lower[j],
                                         sc.leader_bounds.upper[j], sc.cost.pwl_segments)
                 : std::abs(u[j]);
    }
  }
  return sc.cost.effort_weight * eff;
}

// ---- Leader grid restriction ------------------------------------------

// Ties every input variable of one channel to an evenly spaced grid
// through one-hot level selectors; used by the desk-scale equivalence
// oracles against brute-force enumeration.
struct GridRestriction {
  std::vector<std::vector<std::vector<VarId>>> lambda;  // [t][j][level]
  int levels = 0;

  bool active() const { return levels > 0; }
};

GridRestriction restrict_to_grid(MilpModel& m, const std::vector<std::vector<VarId>>& vars,
                                 const dyn::BoundsBox& box, int levels,
                                 const std::string& stem) {
  GridRestriction g;
  g.levels = levels;
  g.lambda.resize(vars.size());
  for (std::size_t t = 0; t < vars.size(); ++t) {
    g.lambda[t].resize(vars[t].size());
    for (std::size_t j = 0; j < vars[t].size(); ++j) {
      LinExpr pick;   // u = sum_l value_l * lambda_l
      LinExpr onehot; // sum_l lambda_l = 1
      pick.add(vars[t][j], 1.0);
      for (int l = 0; l < levels; ++l) {
        VarId lam = m.add_binary(stem + "[" + std::to_string(t) + "][" + std::to_string(j) +
                                 "][" + std::to_string(l) + "]");
        g.lambda[t][j].push_back(lam);
        pick.add(lam, -grid_value(box.lower[static_cast<int>(j)],
                                  box.upper[static_cast<int>(j)], levels, l));
        onehot.add(lam, 1.0);
      }
      m.add_constraint(pick, Sense::Eq, 0.0);
      m.add_constraint(onehot, Sense::Eq, 1.0);
    }
  }
  return g;
}

// Leader sequence from a solution under an active grid: snap each input to
// its exact level so downstream fixed-channel encodings are reproducible.
void snap_to_grid(std::vector<Eigen::VectorXd>& u, const dyn::BoundsBox& box, int levels) {
  for (Eigen::VectorXd& v : u) {
    for (int j = 0; j < v.size(); ++j) {
      v[j] = grid_value(box.lower[j], box.upper[j], levels,
                        nearest_level(v[j], box.lower[j], box.upper[j], levels));
    }
  }
}

void propose_grid_levels(std::vector<std::pair<VarId, double>>& props,
                         const GridRestriction& grid, const dyn::BoundsBox& box,
                         std::vector<Eigen::VectorXd>& u) {
  for (std::size_t t = 0; t < grid.lambda.size(); ++t) {
    for (std::size_t j = 0; j < grid.lambda[t].size(); ++j) {
      const int jj = static_cast<int>(j);
      const int best = nearest_level(u[t][jj], box.lower[jj], box.upper[jj], grid.levels);
      u[t][jj] = grid_value(box.lower[jj], box.upper[jj], grid.levels, best);
      for (int l = 0; l < grid.levels; ++l) {
        props.emplace_back(grid.lambda[t][j][static_cast<std::size_t>(l)],
                           l == best ? 1.0 : 0.0);
      }
    }
  }
}

// ---- min-of-two gadget --------------------------------------------------

// v = min(a, b) with one selector (s = 1 picks a); both halves kept so a
// minimizing objective cannot dive below the true minimum.
std::pair<VarId, VarId> encode_min2(MilpModel& m, VarId a, VarId b, double big_m_cap,
                                    const std::string& stem) {
  const milp::Variable& va = m.variable(a);
  const milp::Variable& vb = m.variable(b);
  const double lo = std::min(va.lower, vb.lower);
  const double hi = std::min(va.upper, vb.upper);
  const double big = std::max(va.upper, vb.upper) - lo;
  if (!(big <= big_m_cap)) {
    throw ConfigError("min gadget needs big-M " + format_double(big) +
                      ", above the configured cap " + format_double(big_m_cap));
  }
  VarId v = m.add_continuous(lo, hi, stem);
  VarId s = m.add_binary(stem + "_sel");
  auto row = [&](VarId arg, double scoeff, Sense sense, double rhs) {
    LinExpr e;
    e.add(v, 1.0);
    e.add(arg, -1.0);
    if (scoeff != 0.0) e.add(s, scoeff);
    m.add_constraint(e, sense, rhs);
  };
  row(a, 0.0, Sense::Le, 0.0);    // v <= a
  row(b, 0.0, Sense::Le, 0.0);    // v <= b
  row(a, -big, Sense::Ge, -big);  // v >= a - M(1-s)
  row(b, big, Sense::Ge, 0.0);    // v >= b - M s
  return {v, s};
}

// ---- Follower grid enumeration ------------------------------------------

double grid_sequence_count(const dyn::BoundsBox& box, int N, int levels) {
  return std::pow(static_cast<double>(levels), static_cast<double>(box.dim()) * N);
}

// Calls fn with every follower grid sequence (odometer order). The buffer
// is reused; callers copy what they keep.
template <typename F>
void for_each_grid_sequence(const dyn::BoundsBox& box, int N, int levels, F&& fn) {
  const int digits = box.dim() * N;
  std::vector<int> idx(static_cast<std::size_t>(digits), 0);
  std::vector<Eigen::VectorXd> u(static_cast<std::size_t>(N), Eigen::VectorXd(box.dim()));
  for (;;) {
    for (int t = 0; t < N; ++t) {
      for (int j = 0; j < box.dim(); ++j) {
        u[static_cast<std::size_t>(t)][j] =
            grid_value(box.lower[j], box.upper[j], levels,
                       idx[static_cast<std::size_t>(t * box.dim() + j)]);
      }
    }
    fn(u);
    int d = 0;
    for (; d < digits; ++d) {
      if (++idx[static_cast<std::size_t>(d)] < levels) break;
      idx[static_cast<std::size_t>(d)] = 0;
    }
    if (d == digits) break;
  }
}

// ---- Cooperative master --------------------------------------------------

struct CoopMaster {
  MilpModel model;
  std::unique_ptr<EncodingContext> existential;
  std::vector<std::unique_ptr<EncodingContext>> copies;
  VarId k;
  std::vector<VarId> z_not_f;  // Force-mode roots of !phi_F, one per copy
  std::vector<VarId> z_f;      // derived z^F binaries, one per copy
  GridRestriction leader_grid;
  GridRestriction follower_grid;
};

// Minimize k subject to: the existential follower response satisfies
// phi_F; and for every candidate, a frozen trajectory copy with
// rho^K(k, x0, u_L, candidate) >= 0 and z^L >= z^F.
std::unique_ptr<CoopMaster> build_coop_master(const dyn::Scenario& sc,
                                              const SynthConfig& cfg,
                                              const CandidateSet& cands) {
  auto M = std::make_unique<CoopMaster>();
  enc::EncodeOptions eo = cfg.encode;
  eo.prefix = "e_";
  M->existential = std::make_unique<EncodingContext>(M->model, sc, Channel::variables(),
                                                     Channel::variables(), eo);
  VarId z_exist = enc::encode_bool(*M->existential, sc.phi_F, 0, BoolMode::Force);
  M->model.set_variable_bounds(z_exist, 1.0, 1.0);
  if (cfg.leader_grid_levels > 0) {
    M->leader_grid = restrict_to_grid(M->model, M->existential->leader_vars(),
                                      sc.leader_bounds, cfg.leader_grid_levels, "lamL");
  }
  // A configured follower grid restricts the whole response set, so the
  // existential witness must come from the same grid the falsifier and the
  // enumeration oracle search.
  if (cfg.follower_grid_levels > 0 && sc.system.m_F() > 0) {
    M->follower_grid = restrict_to_grid(M->model, M->existential->follower_vars(),
                                        sc.follower_bounds, cfg.follower_grid_levels,
                                        "lamF");
  }

  // Candidate copies share the leader variables. Costs first, so k's
  // bounds can cover every candidate's range before rho^K consumes it.
  std::vector<LinExpr> costs;
  double k_lo = -1.0, k_hi = 1.0;
  for (int j = 0; j < cands.size(); ++j) {
    enc::EncodeOptions co = cfg.encode;
    co.prefix = "c" + std::to_string(j) + "_";
    M->copies.push_back(std::make_unique<EncodingContext>(
        M->model, sc, Channel::shared(M->existential->leader_vars()),
        Channel::fixed(cands.sequence(j)), co));
    // Under-mode leader robustness: the copy's cost can sit anywhere at or
    // above the true relaxed cost, so k >= cost_j certifies the bound.
    costs.push_back(enc::encode_cost(*M->copies.back(), sc.cost, RhoMode::Under));
    auto [lo, hi] = enc::expr_interval(M->model, costs.back());
    k_lo = std::min(k_lo, lo - 1.0);
    k_hi = std::max(k_hi, hi + 1.0);
  }
  M->k = M->model.add_continuous(k_lo, k_hi, "k");

  FormulaPtr not_phi_f = Formula::make_not(sc.phi_F);
  const bool trivial_follower = sc.phi_F->op() == stl::Op::True;
  for (int j = 0; j < cands.size(); ++j) {
    EncodingContext& ctx = *M->copies[static_cast<std::size_t>(j)];
    if (trivial_follower) {
      // Every response succeeds, so the response branch of rho^K can never
      // fire: the gadget degenerates to the plain cost bound k >= J_S.
      LinExpr row(M->k);
      row -= costs[static_cast<std::size_t>(j)];
      M->model.add_constraint(row, Sense::Ge, 0.0, "rhoK_pos" + std::to_string(j));
    } else {
      // Over-mode follower robustness: it can be pushed down exactly to
      // the true value, so the rho^K response branch opens only when the
      // candidate genuinely fails phi_F.
      VarId rho_f = enc::encode_robustness(ctx, sc.phi_F, 0, RhoMode::Over);
      VarId rho_k = enc::encode_rhoK(ctx, M->k, costs[static_cast<std::size_t>(j)], rho_f);
      M->model.add_constraint(LinExpr(rho_k), Sense::Ge, 0.0,
                              "rhoK_pos" + std::to_string(j));
    }
    // z^L >= z^F via the forced complement: z^F = 1 - z(!phi_F).
    VarId z_l = enc::encode_bool(ctx, sc.phi_L, 0, BoolMode::Force);
    VarId z_nf = enc::encode_bool(ctx, not_phi_f, 0, BoolMode::Force);
    VarId z_f = M->model.add_binary("zF" + std::to_string(j));
    LinExpr comp;
    comp.add(z_f, 1.0);
    comp.add(z_nf, 1.0);
    M->model.add_constraint(comp, Sense::Eq, 1.0);
    enc::encode_implication(ctx, z_l, z_f);
    M->z_not_f.push_back(z_nf);
    M->z_f.push_back(z_f);
  }
  M->model.set_objective(ObjSense::Minimize, LinExpr(M->k));
  return M;
}

milp::CompletionHeuristic coop_master_heuristic(const dyn::Scenario& sc,
                                                const SynthConfig& cfg, CoopMaster* M) {
  return [&sc, &cfg, M](const Eigen::VectorXd& relax) {
    std::vector<std::pair<VarId, double>> props;
    std::vector<double> values;
    std::vector<Eigen::VectorXd> u_l =
        read_sequence(relax, M->existential->leader_vars(), sc.leader_bounds);
    if (M->leader_grid.active()) {
      propose_grid_levels(props, M->leader_grid, sc.leader_bounds, u_l);
    }
    std::vector<Eigen::VectorXd> u_f;
    if (sc.system.m_F() > 0) {
      u_f = read_sequence(relax, M->existential->follower_vars(), sc.follower_bounds);
      if (M->follower_grid.active()) {
        propose_grid_levels(props, M->follower_grid, sc.follower_bounds, u_f);
      }
    } else {
      u_f = dyn::zero_inputs(0, sc.N);
    }
    M->existential->propose_assignment(values, props, u_l, u_f);
    for (std::size_t j = 0; j < M->copies.size(); ++j) {
      M->copies[j]->propose_assignment(values, props, {}, {});
      const double z_nf = values[static_cast<std::size_t>(M->z_not_f[j].index)];
      if (!std::isnan(z_nf)) props.emplace_back(M->z_f[j], 1.0 - z_nf);
    }
    return props;
  };
}

// ---- Falsifiers -----------------------------------------------------------

struct CoopFalsifier {
  MilpModel model;
  std::unique_ptr<EncodingContext> ctx;
  VarId value;     // min(rho^K, rho of phi_F -> phi_L)
  VarId selector;  // 1 when rho^K attains the min
  VarId rho_k;
  VarId rho_imp;
};

// Adversary over the follower box: minimize the lesser of rho^K and the
// implication robustness. Every piece is bounded below by its true value
// (Over on maxima feeding the objective downward, Under on phi_F), so the
// optimum equals the true worst case and any negative value names a
// genuine violator.
std::unique_ptr<CoopFalsifier> build_coop_falsifier(const dyn::Scenario& sc,
                                                    const SynthConfig& cfg,
                                                    const std::vector<Eigen::VectorXd>& u_L,
                                                    double k_val) {
  auto F = std::make_unique<CoopFalsifier>();
  enc::EncodeOptions eo = cfg.encode;
  eo.prefix = "f_";
  F->ctx = std::make_unique<EncodingContext>(F->model, sc, Channel::fixed(u_L),
                                             Channel::variables(), eo);
  VarId k = F->model.add_continuous(k_val, k_val, "k");
  LinExpr cost = enc::encode_cost(*F->ctx, sc.cost, RhoMode::Over);
  if (sc.phi_F->op() == stl::Op::True) {
    // The response branch of rho^K is -rho(true) = -infinity; the gadget
    // collapses to the cost branch alone.
    LinExpr diff(k);
    diff -= cost;
    auto [lo, hi] = enc::expr_interval(F->model, diff);
    F->rho_k = F->model.add_continuous(lo, hi, "f_rhoK");
    LinExpr row(F->rho_k);
    row -= diff;
    F->model.add_constraint(row, Sense::Eq, 0.0);
  } else {
    VarId rho_f = enc::encode_robustness(*F->ctx, sc.phi_F, 0, RhoMode::Under);
    F->rho_k = enc::encode_rhoK(*F->ctx, k, cost, rho_f);
  }
  FormulaPtr implication = Formula::make_or({Formula::make_not(sc.phi_F), sc.phi_L});
  F->rho_imp = enc::encode_robustness(*F->ctx, implication, 0, RhoMode::Over);
  std::tie(F->value, F->selector) =
      encode_min2(F->model, F->rho_k, F->rho_imp, cfg.encode.big_m, "fmin");
  F->model.set_objective(ObjSense::Minimize, LinExpr(F->value));
  return F;
}

milp::CompletionHeuristic coop_falsifier_heuristic(const dyn::Scenario& sc,
                                                   CoopFalsifier* F) {
  return [&sc, F](const Eigen::VectorXd& relax) {
    std::vector<std::pair<VarId, double>> props;
    std::vector<double> values;
    std::vector<Eigen::VectorXd> u_f =
        sc.system.m_F() > 0
            ? read_sequence(relax, F->ctx->follower_vars(), sc.follower_bounds)
            : dyn::zero_inputs(0, sc.N);
    F->ctx->propose_assignment(values, props, {}, u_f);
    const double a = values[static_cast<std::size_t>(F->rho_k.index)];
    const double b = values[static_cast<std::size_t>(F->rho_imp.index)];
    if (!std::isnan(a) && !std::isnan(b)) props.emplace_back(F->selector, a <= b ? 1.0 : 0.0);
    return props;
  };
}

struct AntFalsifier {
  MilpModel model;
  std::unique_ptr<EncodingContext> ctx;
  VarId rho_f;
};

std::unique_ptr<AntFalsifier> build_ant_falsifier(const dyn::Scenario& sc,
                                                  const SynthConfig& cfg,
                                                  const std::vector<Eigen::VectorXd>& u_L) {
  auto F = std::make_unique<AntFalsifier>();
  enc::EncodeOptions eo = cfg.encode;
  eo.prefix = "f_";
  F->ctx = std::make_unique<EncodingContext>(F->model, sc, Channel::fixed(u_L),
                                             Channel::variables(), eo);
  // Under-mode: feasible values sit at or below the truth, and maximizing
  // pushes to it exactly.
  F->rho_f = enc::encode_robustness(*F->ctx, sc.phi_F, 0, RhoMode::Under);
  F->model.set_objective(ObjSense::Maximize, LinExpr(F->rho_f));
  return F;
}

milp::CompletionHeuristic ant_falsifier_heuristic(const dyn::Scenario& sc, AntFalsifier* F) {
  return [&sc, F](const Eigen::VectorXd& relax) {
    std::vector<std::pair<VarId, double>> props;
    std::vector<double> values;
    std::vector<Eigen::VectorXd> u_f =
        sc.system.m_F() > 0
            ? read_sequence(relax, F->ctx->follower_vars(), sc.follower_bounds)
            : dyn::zero_inputs(0, sc.N);
    F->ctx->propose_assignment(values, props, {}, u_f);
    return props;
  };
}

struct FalsifierVerdict {
  double value = 0.0;
  std::vector<Eigen::VectorXd> minimizer;  // or maximizer, per mode
};

// Exhaustive numeric falsifier over the configured follower grid; the
// measure mirrors the MILP falsifiers exactly (monitored robustness plus
// the tangent-relaxed effort). Sequences leaving the state box are not
// admissible responses and are skipped.
FalsifierVerdict grid_falsify(const dyn::Scenario& sc, const SynthConfig& cfg, Mode mode,
                              const std::vector<Eigen::VectorXd>& u_L, double k_val) {
  const double total =
      grid_sequence_count(sc.follower_bounds, sc.N, cfg.follower_grid_levels);
  if (total > 5e6) {
    throw InputError("follower grid has " + format_double(total) +
                     " sequences; too large to enumerate");
  }
  FalsifierVerdict best;
  best.value = mode == Mode::Cooperative ? std::numeric_limits<double>::infinity()
                                         : -std::numeric_limits<double>::infinity();
  // Leader effort is constant across follower responses; fold it once.
  const double weighted_eff = milp_measure_effort(sc, u_L);
  for_each_grid_sequence(
      sc.follower_bounds, sc.N, cfg.follower_grid_levels,
      [&](const std::vector<Eigen::VectorXd>& u_f) {
        dyn::Trajectory traj = dyn::simulate(sc, u_L, u_f);
        if (!states_in_box(sc, traj.states)) return;
        const double rho_f = stl::robustness(*sc.phi_F, traj.states);
        double v;
        if (mode == Mode::Antagonistic) {
          v = rho_f;
          if (v <= best.value) return;
        } else {
          const double rho_l = stl::robustness(*sc.phi_L, traj.states);
          const double j_s =
              weighted_eff - (sc.cost.include_leader_robustness ? rho_l : 0.0);
          const double rho_k = std::max(k_val - j_s, -rho_f);
          const double rho_imp = std::max(-rho_f, rho_l);
          v = std::min(rho_k, rho_imp);
          if (v >= best.value) return;
        }
        best.value = v;
        best.minimizer = u_f;
      });
  if (best.minimizer.empty()) {
    // Every grid response left the state box; nothing can violate.
    best.value = mode == Mode::Cooperative ? std::numeric_limits<double>::infinity()
                                           : -std::numeric_limits<double>::infinity();
  }
  return best;
}

FalsifierVerdict run_coop_falsifier(const dyn::Scenario& sc, const SynthConfig& cfg,
                                    const std::vector<Eigen::VectorXd>& u_L, double k_val) {
  if (cfg.follower_grid_levels > 0) {
    return grid_falsify(sc, cfg, Mode::Cooperative, u_L, k_val);
  }
  auto F = build_coop_falsifier(sc, cfg, u_L, k_val);
  SolveResult r = run_solver(F->model, cfg, coop_falsifier_heuristic(sc, F.get()));
  if (r.status != SolveStatus::Optimal) {
    throw ConfigError(std::string("cooperative falsifier stopped with status ") +
                      milp::to_string(r.status));
  }
  FalsifierVerdict v;
  v.value = r.objective;
  v.minimizer = follower_from_result(*F->ctx, r, sc);
  return v;
}

FalsifierVerdict run_ant_falsifier(const dyn::Scenario& sc, const SynthConfig& cfg,
                                   const std::vector<Eigen::VectorXd>& u_L) {
  if (cfg.follower_grid_levels > 0) {
    return grid_falsify(sc, cfg, Mode::Antagonistic, u_L, 0.0);
  }
  auto F = build_ant_falsifier(sc, cfg, u_L);
  SolveResult r = run_solver(F->model, cfg, ant_falsifier_heuristic(sc, F.get()));
  if (r.status != SolveStatus::Optimal) {
    throw ConfigError(std::string("antagonistic falsifier stopped with status ") +
                      milp::to_string(r.status));
  }
  FalsifierVerdict v;
  v.value = r.objective;
  v.minimizer = follower_from_result(*F->ctx, r, sc);
  return v;
}

// ---- Antagonistic master --------------------------------------------------

struct AntMaster {
  MilpModel model;
  std::unique_ptr<EncodingContext> main;  // leader variables, fallback follower
  std::vector<std::unique_ptr<EncodingContext>> copies;
  GridRestriction grid;
};

// Minimize J_S under the fallback follower input subject to the leader
// specification and to forcing !phi_F on every candidate copy.
std::unique_ptr<AntMaster> build_ant_master(const dyn::Scenario& sc, const SynthConfig& cfg,
                                            const CandidateSet& cands) {
  auto M = std::make_unique<AntMaster>();
  enc::EncodeOptions eo = cfg.encode;
  eo.prefix = "m_";
  M->main = std::make_unique<EncodingContext>(
      M->model, sc, Channel::variables(), Channel::fixed(sc.noninterfering_or_zero()), eo);
  VarId z_l = enc::encode_bool(*M->main, sc.phi_L, 0, BoolMode::Force);
  M->model.set_variable_bounds(z_l, 1.0, 1.0);
  LinExpr cost = enc::encode_cost(*M->main, sc.cost, RhoMode::Under);
  if (cfg.leader_grid_levels > 0) {
    M->grid = restrict_to_grid(M->model, M->main->leader_vars(), sc.leader_bounds,
                               cfg.leader_grid_levels, "lamL");
  }
  FormulaPtr not_phi_f = Formula::make_not(sc.phi_F);
  for (int j = 0; j < cands.size(); ++j) {
    enc::EncodeOptions co = cfg.encode;
    co.prefix = "c" + std::to_string(j) + "_";
    M->copies.push_back(std::make_unique<EncodingContext>(
        M->model, sc, Channel::shared(M->main->leader_vars()),
        Channel::fixed(cands.sequence(j)), co));
    VarId z_nf = enc::encode_bool(*M->copies.back(), not_phi_f, 0, BoolMode::Force);
    M->model.set_variable_bounds(z_nf, 1.0, 1.0);
  }
  M->model.set_objective(ObjSense::Minimize, cost);
  return M;
}

milp::CompletionHeuristic ant_master_heuristic(const dyn::Scenario& sc,
                                               const SynthConfig& cfg, AntMaster* M) {
  return [&sc, &cfg, M](const Eigen::VectorXd& relax) {
    std::vector<std::pair<VarId, double>> props;
    std::vector<double> values;
    std::vector<Eigen::VectorXd> u_l =
        read_sequence(relax, M->main->leader_vars(), sc.leader_bounds);
    if (M->grid.active()) {
      propose_grid_levels(props, M->grid, sc.leader_bounds, u_l);
    }
    M->main->propose_assignment(values, props, u_l, {});
    for (auto& copy : M->copies) copy->propose_assignment(values, props, {}, {});
    return props;
  };
}

// ---- Certification ---------------------------------------------------------

// Steps (a) and (c) of the certificate: re-simulation + monitors of the
// decided play, then randomized box sampling plus the constant corner
// inputs and the fallback sequence. The falsifier verdict (step b) is
// supplied by the caller, either fresh or from the loop's final solve.
Certificate certify(const dyn::Scenario& sc, const SynthConfig& cfg, Mode mode,
                    const std::vector<Eigen::VectorXd>& u_L,
                    const std::vector<Eigen::VectorXd>& witness, double k_val,
                    const FalsifierVerdict& verdict) {
  Certificate cert;
  cert.falsifier_value = verdict.value;
  // The falsifier certifies the relaxed cost only up to its exit
  // tolerance, and the exact norm exceeds the relaxed one by at most the
  // tangent gap; both slacks belong in the certified bound.
  const double cost_cap = k_val + pwl_gap_bound(sc) + cfg.cegis_tol + 1e-9;

  auto fail = [&](const std::string& why, const std::vector<Eigen::VectorXd>& u_f) {
    cert.passed = false;
    cert.detail = why;
    cert.witness = u_f;
    return cert;
  };

  // (a) the decided play, re-simulated and monitored.
  if (mode == Mode::Cooperative) {
    if (static_cast<int>(witness.size()) != sc.N) {
      return fail("missing follower response witness", {});
    }
    dyn::Trajectory traj = dyn::simulate(sc, u_L, witness);
    if (!states_in_box(sc, traj.states)) {
      return fail("witness response leaves the state box", witness);
    }
    if (!stl::eval_bool(*sc.phi_F, traj.states)) {
      return fail("witness response does not satisfy the follower specification", witness);
    }
    if (!stl::eval_bool(*sc.phi_L, traj.states)) {
      return fail("leader specification fails under the witness response", witness);
    }
    if (dyn::eval_cost(sc, traj) > cost_cap) {
      return fail("witness response exceeds the certified cost bound", witness);
    }
  } else {
    const auto fallback = sc.noninterfering_or_zero();
    dyn::Trajectory traj = dyn::simulate(sc, u_L, fallback);
    if (!states_in_box(sc, traj.states)) {
      return fail("fallback trajectory leaves the state box", fallback);
    }
    if (!stl::eval_bool(*sc.phi_L, traj.states)) {
      return fail("leader specification fails under the fallback input", fallback);
    }
  }

  // (b) the falsifier verdict.
  if (mode == Mode::Cooperative ? verdict.value < -cfg.cegis_tol
                                : verdict.value > -cfg.cegis_tol) {
    return fail("falsifier found value " + format_double(verdict.value),
                verdict.minimizer);
  }

  // (c) randomized sampling of the follower box, plus every box corner held
  // constant, the fallback sequence, and (cooperative) the witness itself.
  std::vector<std::vector<Eigen::VectorXd>> samples;
  const int m_f = sc.system.m_F();
  std::mt19937_64 rng(cfg.seed ^ 0xda3e39cb94b95bdbULL);
  for (int i = 0; i < cfg.verify_samples; ++i) {
    // Under a follower grid restriction the response set is the grid, so
    // samples come from it too.
    samples.push_back(draw_sequence(rng, sc.follower_bounds, sc.N,
                                    cfg.follower_grid_levels));
  }
  if (m_f > 0 && m_f <= 12) {
    for (int corner = 0; corner < (1 << m_f); ++corner) {
      Eigen::VectorXd v(m_f);
      for (int j = 0; j < m_f; ++j) {
        v[j] = (corner >> j) & 1 ? sc.follower_bounds.upper[j] : sc.follower_bounds.lower[j];
      }
      samples.emplace_back(static_cast<std::size_t>(sc.N), v);
    }
  }
  samples.push_back(sc.noninterfering_or_zero());
  if (mode == Mode::Cooperative) samples.push_back(witness);

  for (const auto& u_f : samples) {
    dyn::Trajectory traj = dyn::simulate(sc, u_L, u_f);
    if (!states_in_box(sc, traj.states)) {
      ++cert.samples_skipped;
      continue;
    }
    ++cert.samples_checked;
    const bool follower_ok = stl::eval_bool(*sc.phi_F, traj.states);
    if (mode == Mode::Antagonistic) {
      if (follower_ok) return fail("sampled response satisfies the follower specification", u_f);
      continue;
    }
    if (!follower_ok) continue;
    if (!stl::eval_bool(*sc.phi_L, traj.states)) {
      return fail("sampled successful response breaks the leader specification", u_f);
    }
    if (dyn::eval_cost(sc, traj) > cost_cap) {
      return fail("sampled successful response exceeds the certified cost bound", u_f);
    }
  }

  cert.passed = true;
  cert.detail = "falsifier value " + format_double(verdict.value) + "; " +
                std::to_string(cert.samples_checked) + " samples checked (" +
                std::to_string(cert.samples_skipped) + " outside the state box)";
  return cert;
}

// Worst exact-norm cost over the known successful responses; the certified
// bound k caps the relaxed measure, so this sampled worst case can exceed
// k by at most the relaxation gap.
double coop_exact_cost(const dyn::Scenario& sc, const std::vector<Eigen::VectorXd>& u_L,
                       const CandidateSet& cands,
                       const std::vector<Eigen::VectorXd>& witness) {
  double worst = -std::numeric_limits<double>::infinity();
  auto consider = [&](const std::vector<Eigen::VectorXd>& u_f) {
    dyn::Trajectory traj = dyn::simulate(sc, u_L, u_f);
    if (!states_in_box(sc, traj.states)) return;
    if (!stl::eval_bool(*sc.phi_F, traj.states)) return;
    worst = std::max(worst, dyn::eval_cost(sc, traj));
  };
  for (int j = 0; j < cands.size(); ++j) consider(cands.sequence(j));
  consider(witness);
  return worst;
}

void seed_candidates(CandidateSet& cands, const dyn::Scenario& sc, const SynthConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  for (int i = 0; i < cfg.init_candidates; ++i) {
    // Duplicate draws are simply skipped; only counterexample duplicates
    // signal a stall.
    cands.add(draw_sequence(rng, sc.follower_bounds, sc.N, cfg.follower_grid_levels),
              Provenance::RandomInit);
  }
}

}  // namespace

// ---- CandidateSet ----------------------------------------------------------

CandidateSet::CandidateSet(const dyn::BoundsBox& follower_box, int N)
    : box_(follower_box), N_(N) {}

bool CandidateSet::add(std::vector<Eigen::VectorXd> u, Provenance origin) {
  if (static_cast<int>(u.size()) != N_) {
    throw InputError("candidate must list " + std::to_string(N_) + " inputs");
  }
  for (const Eigen::VectorXd& v : u) {
    if (static_cast<int>(v.size()) != box_.dim() || !box_.contains(v, 1e-6)) {
      throw InputError("candidate leaves the follower input bounds");
    }
  }
  for (const Item& item : items_) {
    if (sequences_close(item.u, u, kDedupTol)) return false;
  }
  items_.push_back(Item{std::move(u), origin});
  return true;
}

const std::vector<Eigen::VectorXd>& CandidateSet::sequence(int i) const {
  if (i < 0 || i >= size()) throw InternalError("candidate index out of range");
  return items_[static_cast<std::size_t>(i)].u;
}

Provenance CandidateSet::origin(int i) const {
  if (i < 0 || i >= size()) throw InternalError("candidate index out of range");
  return items_[static_cast<std::size_t>(i)].origin;
}

// ---- Response queries -------------------------------------------------------

bool is_successful_response(const dyn::Scenario& sc,
                            const std::vector<Eigen::VectorXd>& u_L,
                            const std::vector<Eigen::VectorXd>& u_F) {
  dyn::Trajectory traj = dyn::simulate(sc, u_L, u_F);
  // A response that drives the state out of its box is not admissible.
  if (!states_in_box(sc, traj.states)) return false;
  return stl::eval_bool(*sc.phi_F, traj.states);
}

SrWitness sr_nonempty(const dyn::Scenario& sc, const std::vector<Eigen::VectorXd>& u_L,
                      const SynthConfig& cfg) {
  MilpModel model;
  enc::EncodeOptions eo = cfg.encode;
  eo.prefix = "sr_";
  EncodingContext ctx(model, sc, Channel::fixed(u_L), Channel::variables(), eo);
  VarId z = enc::encode_bool(ctx, sc.phi_F, 0, BoolMode::Force);
  model.set_variable_bounds(z, 1.0, 1.0);
  model.set_objective(ObjSense::Minimize, LinExpr(0.0));
  SolveResult r = run_solver(model, cfg, nullptr);
  SrWitness w;
  if (r.status == SolveStatus::Infeasible) return w;
  if (r.status != SolveStatus::Optimal) {
    throw ConfigError(std::string("successful-response query stopped with status ") +
                      milp::to_string(r.status));
  }
  w.nonempty = true;
  w.witness = follower_from_result(ctx, r, sc);
  return w;
}

ResponseQuery query_response(const dyn::Scenario& sc,
                             const std::vector<Eigen::VectorXd>& u_L,
                             const std::vector<Eigen::VectorXd>& u_F,
                             const SynthConfig& cfg) {
  ResponseQuery q;
  q.successful = is_successful_response(sc, u_L, u_F);
  q.sr_nonempty = q.successful || sr_nonempty(sc, u_L, cfg).nonempty;
  q.best_response = q.sr_nonempty
                        ? q.successful
                        : sequences_close(u_F, sc.noninterfering_or_zero(), kDedupTol);
  return q;
}

double pwl_gap_bound(const dyn::Scenario& sc) {
  if (sc.cost.norm != dyn::EffortNorm::SquaredPwl || sc.cost.effort_weight == 0.0) {
    return 0.0;
  }
  double per_step = 0.0;
  for (int j = 0; j < sc.system.m_L(); ++j) {
    const double h = (sc.leader_bounds.upper[j] - sc.leader_bounds.lower[j]) /
                     static_cast<double>(sc.cost.pwl_segments);
    per_step += h * h / 4.0;
  }
  return sc.cost.effort_weight * static_cast<double>(sc.N) * per_step;
}

// ---- Synthesis loops --------------------------------------------------------

SynthesisOutcome cooperative_synthesize(const dyn::Scenario& sc, const SynthConfig& cfg) {
  check_config(cfg);
  check_fallback(sc);
  SynthesisOutcome out;
  out.mode = Mode::Cooperative;
  CandidateSet cands(sc.follower_bounds, sc.N);
  seed_candidates(cands, sc, cfg);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    auto master = build_coop_master(sc, cfg, cands);
    SolveResult r =
        run_solver(master->model, cfg, coop_master_heuristic(sc, cfg, master.get()));
    if (r.status == SolveStatus::Infeasible) {
      out.status = SynthStatus::Infeasible;
      out.diagnostic = "master infeasible against " + std::to_string(cands.size()) +
                       " candidates";
      return out;
    }
    if (r.status == SolveStatus::Unbounded) {
      throw InternalError("cooperative master reported unbounded");
    }
    if (r.status != SolveStatus::Optimal) {
      out.status = SynthStatus::IterationLimit;
      out.diagnostic = std::string("master stopped with status ") + milp::to_string(r.status);
      return out;
    }
    std::vector<Eigen::VectorXd> u_l =
        read_sequence(r.assignment, master->existential->leader_vars(), sc.leader_bounds);
    if (master->leader_grid.active()) {
      snap_to_grid(u_l, sc.leader_bounds, master->leader_grid.levels);
    }
    std::vector<Eigen::VectorXd> witness =
        follower_from_result(*master->existential, r, sc);
    if (master->follower_grid.active()) {
      snap_to_grid(witness, sc.follower_bounds, master->follower_grid.levels);
    }
    const double k_val = r.value(master->k);
    out.u_L = u_l;
    out.k = k_val;
    out.witness_response = witness;

    IterationRecord rec;
    rec.candidates = cands.size();
    rec.master_objective = k_val;
    FalsifierVerdict verdict = run_coop_falsifier(sc, cfg, u_l, k_val);
    rec.falsifier_value = verdict.value;

    std::vector<Eigen::VectorXd> counterexample;
    if (verdict.value < -cfg.cegis_tol) {
      counterexample = verdict.minimizer;
    } else {
      Certificate cert = certify(sc, cfg, Mode::Cooperative, u_l, witness, k_val, verdict);
      if (cert.passed) {
        rec.counterexample = false;
        out.iterations.push_back(rec);
        out.certificate = cert;
        out.status = SynthStatus::Success;
        out.exact_cost = coop_exact_cost(sc, u_l, cands, witness);
        return out;
      }
      if (cert.witness.empty()) {
        throw InternalError("certificate failed without a witness: " + cert.detail);
      }
      counterexample = cert.witness;
    }
    rec.counterexample = true;
    out.iterations.push_back(rec);
    if (!cands.add(std::move(counterexample), Provenance::Counterexample)) {
      out.status = SynthStatus::IterationLimit;
      out.diagnostic = "refinement stalled: the falsifier repeated a known candidate "
                       "(value " + format_double(verdict.value) + ")";
      return out;
    }
  }
  out.status = SynthStatus::IterationLimit;
  out.diagnostic = "no certified plan within " + std::to_string(cfg.max_iters) +
                   " iterations";
  return out;
}

SynthesisOutcome antagonistic_synthesize(const dyn::Scenario& sc, const SynthConfig& cfg) {
  check_config(cfg);
  check_fallback(sc);
  SynthesisOutcome out;
  out.mode = Mode::Antagonistic;
  if (sc.phi_F->op() == stl::Op::True) {
    out.status = SynthStatus::Infeasible;
    out.diagnostic = "the follower task is trivially satisfied; no leader input can "
                     "block it";
    return out;
  }
  CandidateSet cands(sc.follower_bounds, sc.N);
  seed_candidates(cands, sc, cfg);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    auto master = build_ant_master(sc, cfg, cands);
    SolveResult r =
        run_solver(master->model, cfg, ant_master_heuristic(sc, cfg, master.get()));
    if (r.status == SolveStatus::Infeasible) {
      out.status = SynthStatus::Infeasible;
      out.diagnostic = "master infeasible: the leader specification is unreachable or "
                       "some candidate response cannot be blocked";
      return out;
    }
    if (r.status == SolveStatus::Unbounded) {
      throw InternalError("antagonistic master reported unbounded");
    }
    if (r.status != SolveStatus::Optimal) {
      out.status = SynthStatus::IterationLimit;
      out.diagnostic = std::string("master stopped with status ") + milp::to_string(r.status);
      return out;
    }
    std::vector<Eigen::VectorXd> u_l =
        read_sequence(r.assignment, master->main->leader_vars(), sc.leader_bounds);
    if (master->grid.active()) snap_to_grid(u_l, sc.leader_bounds, master->grid.levels);
    out.u_L = u_l;

    IterationRecord rec;
    rec.candidates = cands.size();
    rec.master_objective = r.objective;
    FalsifierVerdict verdict = run_ant_falsifier(sc, cfg, u_l);
    rec.falsifier_value = verdict.value;

    std::vector<Eigen::VectorXd> counterexample;
    if (verdict.value > -cfg.cegis_tol) {
      counterexample = verdict.minimizer;
    } else {
      Certificate cert = certify(sc, cfg, Mode::Antagonistic, u_l, {}, 0.0, verdict);
      if (cert.passed) {
        rec.counterexample = false;
        out.iterations.push_back(rec);
        out.certificate = cert;
        out.status = SynthStatus::Success;
        dyn::Trajectory traj = dyn::simulate(sc, u_l, sc.noninterfering_or_zero());
        out.exact_cost = dyn::eval_cost(sc, traj);
        out.k = out.exact_cost;
        return out;
      }
      if (cert.witness.empty()) {
        throw InternalError("certificate failed without a witness: " + cert.detail);
      }
      counterexample = cert.witness;
    }
    rec.counterexample = true;
    out.iterations.push_back(rec);
    if (!cands.add(std::move(counterexample), Provenance::Counterexample)) {
      out.status = SynthStatus::IterationLimit;
      out.diagnostic = "refinement stalled: the falsifier repeated a known candidate "
                       "(value " + format_double(verdict.value) + ")";
      return out;
    }
  }
  out.status = SynthStatus::IterationLimit;
  out.diagnostic = "no certified plan within " + std::to_string(cfg.max_iters) +
                   " iterations";
  return out;
}

SynthesisOutcome solve_ssp(const dyn::Scenario& sc, const SynthConfig& cfg) {
  SynthesisOutcome coop = cooperative_synthesize(sc, cfg);
  SynthesisOutcome ant = antagonistic_synthesize(sc, cfg);
  const bool coop_ok = coop.status == SynthStatus::Success;
  const bool ant_ok = ant.status == SynthStatus::Success;
  if (coop_ok && ant_ok) {
    return coop.exact_cost <= ant.exact_cost ? std::move(coop) : std::move(ant);
  }
  if (coop_ok) return coop;
  if (ant_ok) return ant;
  if (coop.status == SynthStatus::IterationLimit) return coop;
  if (ant.status == SynthStatus::IterationLimit) return ant;
  return coop;  // both infeasible
}

Certificate verify_outcome(const dyn::Scenario& sc, const SynthesisOutcome& outcome,
                           const SynthConfig& cfg) {
  if (outcome.status != SynthStatus::Success) {
    throw InputError("only Success outcomes can be verified");
  }
  FalsifierVerdict verdict =
      outcome.mode == Mode::Cooperative
          ? run_coop_falsifier(sc, cfg, outcome.u_L, outcome.k)
          : run_ant_falsifier(sc, cfg, outcome.u_L);
  return certify(sc, cfg, outcome.mode, outcome.u_L, outcome.witness_response, outcome.k,
                 verdict);
}

// ---- Brute force -------------------------------------------------------------

BruteForceResult brute_force_ssp(const dyn::Scenario& sc, int leader_levels,
                                 int follower_levels) {
  if (leader_levels < 2 || follower_levels < 2) {
    throw ConfigError("brute force needs at least 2 grid levels per side");
  }
  check_fallback(sc);
  const double leader_count = grid_sequence_count(sc.leader_bounds, sc.N, leader_levels);
  const double follower_count =
      grid_sequence_count(sc.follower_bounds, sc.N, follower_levels);
  if (leader_count > 1e6 || leader_count * follower_count > 2e7) {
    throw InputError("grid of " + format_double(leader_count) + " x " +
                     format_double(follower_count) + " sequences is too large");
  }

  const auto fallback = sc.noninterfering_or_zero();
  BruteForceResult best;
  best.cost = std::numeric_limits<double>::infinity();

  for_each_grid_sequence(sc.leader_bounds, sc.N, leader_levels, [&](const std::vector<
                                                                    Eigen::VectorXd>& u_l) {
    bool any_success = false;
    bool all_success_ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    for_each_grid_sequence(
        sc.follower_bounds, sc.N, follower_levels,
        [&](const std::vector<Eigen::VectorXd>& u_f) {
          if (!all_success_ok) return;
          dyn::Trajectory traj = dyn::simulate(sc, u_l, u_f);
          if (!states_in_box(sc, traj.states)) return;
          if (!stl::eval_bool(*sc.phi_F, traj.states)) return;
          any_success = true;
          if (!stl::eval_bool(*sc.phi_L, traj.states)) {
            all_success_ok = false;
            return;
          }
          worst = std::max(worst, dyn::eval_cost(sc, traj));
        });

    double cost;
    Mode mode;
    if (any_success) {
      if (!all_success_ok) return;  // some successful response breaks phi_L
      cost = worst;
      mode = Mode::Cooperative;
    } else {
      // No successful grid response: the best response is the fallback.
      dyn::Trajectory traj = dyn::simulate(sc, u_l, fallback);
      if (!states_in_box(sc, traj.states)) return;
      if (!stl::eval_bool(*sc.phi_L, traj.states)) return;
      cost = dyn::eval_cost(sc, traj);
      mode = Mode::Antagonistic;
    }
    if (cost < best.cost ||
        (cost == best.cost && best.mode == Mode::Antagonistic && mode == Mode::Cooperative)) {
      best.feasible = true;
      best.cost = cost;
      best.mode = mode;
      best.u_L = u_l;
    }
  });
  return best;
}

}  // namespace stlgame::synth
