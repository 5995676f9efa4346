#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "stlgame/dynamics.hpp"
#include "stlgame/formula.hpp"
#include "stlgame/milp.hpp"

namespace stlgame::enc {

/// How strictly an encoded robustness value is pinned to the min/max
/// semantics. Exact keeps selector binaries at every min and every max
/// node, so any feasible assignment carries the true value. Under drops
/// the selector half at min nodes (feasible rho may sit anywhere below the
/// true value); Over drops it at max nodes (feasible rho may sit anywhere
/// above). Both halve the binary count and are tight whenever the
/// surrounding problem pushes the variable against its slack side, which
/// is how the synthesis masters use them.
enum class RhoMode { Exact, Under, Over };

/// Boolean encodings. Exact makes z equal the satisfaction verdict in
/// every feasible assignment. Force keeps only the "z = 1 implies the
/// formula holds" direction, which is all a master problem needs in order
/// to assert a specification; the relaxed direction avoids spurious
/// infeasibility when a predicate sits inside its decision margin.
enum class BoolMode { Exact, Force };

struct EncodeOptions {
  /// Upper cap on any big-M the encoder derives. Each gadget uses the
  /// tightest constant implied by interval arithmetic over the current
  /// variable bounds; if that exceeds the cap the encoder refuses with a
  /// ConfigError instead of silently emitting a loose model.
  double big_m = 1e6;
  /// Margin separating "satisfied" (mu >= epsilon) from "violated"
  /// (mu <= -epsilon) in the predicate encoding. Values strictly inside
  /// the band admit no binary assignment in the Exact encoding.
  double epsilon = 1e-4;
  /// Prepended to every variable name this context creates, so several
  /// contexts can share one model without name collisions (e.g. "c3_").
  std::string prefix;
};

/// One input channel of the plant: fresh variables bounded by the
/// scenario's input box, variables shared with another context over the
/// same model, or a fixed numeric sequence folded into the dynamics rows.
class Channel {
 public:
  static Channel variables();
  static Channel shared(std::vector<std::vector<milp::VarId>> ids);
  static Channel fixed(std::vector<Eigen::VectorXd> values);

 private:
  enum class Kind { Variables, Shared, Fixed };
  Kind kind_ = Kind::Variables;
  std::vector<std::vector<milp::VarId>> ids_;
  std::vector<Eigen::VectorXd> values_;
  friend class EncodingContext;
};

/// Holds everything one trajectory copy contributes to a model under
/// construction: state variables for x_0..x_N pinned to the scenario's
/// state box (x_0 fixed to the initial state), input variables or fixed
/// input constants per channel, the dynamics equality rows linking them,
/// and a cache so each (subformula, instant, mode) is encoded at most
/// once. The context borrows the model; the caller owns it and may attach
/// several contexts (with distinct prefixes) to build multi-copy masters.
/// Single-owner: one thread mutates a given context.
class EncodingContext {
 public:
  EncodingContext(milp::MilpModel& model, const dyn::Scenario& sc,
                  Channel leader, Channel follower, EncodeOptions opts = {});

  milp::MilpModel& model() { return *model_; }
  const milp::MilpModel& model() const { return *model_; }
  const dyn::Scenario& scenario() const { return *sc_; }
  const EncodeOptions& options() const { return opts_; }

  /// State variable for component i of x_t.
  milp::VarId state_var(int t, int i) const;
  /// Input component as an expression: a variable, or a constant when the
  /// channel is fixed.
  milp::LinExpr leader_input(int t, int j) const;
  milp::LinExpr follower_input(int t, int j) const;
  bool leader_is_fixed() const { return leader_fixed_; }
  bool follower_is_fixed() const { return follower_fixed_; }
  /// Variable ids per instant; throws InternalError when the channel is
  /// fixed numerically. Shapes are [N][m].
  const std::vector<std::vector<milp::VarId>>& leader_vars() const;
  const std::vector<std::vector<milp::VarId>>& follower_vars() const;

  /// Solver hints from a concrete run. Rolls the dynamics forward from the
  /// given input sequences, writes a value for every variable this context
  /// created into `values` (indexed by variable id, NaN = unset), and
  /// appends 0/1 proposals for the context's binaries to `proposals`,
  /// following the margin semantics of the encoding (a predicate counts as
  /// satisfied when mu >= epsilon). Pass an empty sequence for a fixed
  /// channel (its stored inputs are used) or for a shared channel (values
  /// written by the owning context are read back, so call the owner first).
  /// The proposals are feasible for the rows this context emitted whenever
  /// the induced states respect the state box and no exact-mode predicate
  /// lands inside the margin band; infeasible proposals are harmless to
  /// the branch-and-bound heuristic, which re-checks them.
  void propose_assignment(std::vector<double>& values,
                          std::vector<std::pair<milp::VarId, double>>& proposals,
                          const std::vector<Eigen::VectorXd>& u_L,
                          const std::vector<Eigen::VectorXd>& u_F) const;

 private:
  milp::MilpModel* model_ = nullptr;
  const dyn::Scenario* sc_ = nullptr;
  EncodeOptions opts_;
  std::vector<std::vector<milp::VarId>> x_;   // (N+1) x n
  std::vector<std::vector<milp::VarId>> uL_;  // N x m_L, empty when fixed
  std::vector<std::vector<milp::VarId>> uF_;  // N x m_F, empty when fixed
  std::vector<Eigen::VectorXd> uL_fixed_;
  std::vector<Eigen::VectorXd> uF_fixed_;
  bool leader_fixed_ = false;
  bool follower_fixed_ = false;
  bool leader_shared_ = false;
  bool follower_shared_ = false;

  // How to recompute each auxiliary variable from a concrete trajectory,
  // recorded at creation time in dependency order (operands precede users).
  // Backs propose_assignment.
  struct Recipe {
    enum class Kind {
      Const,      // pinned value
      TruthGe,    // binary: expr >= epsilon
      Min,        // min over the operand expressions (Max dually); serves
      Max,        //   boolean chains (over bits) and robustness gadgets
      OneMinus,   // binary: 1 - operand
      SelectMin,  // binary: 1 iff i0 is the first argmin of the operands
      SelectMax,  // binary: 1 iff i0 is the first argmax
      Expr,       // the operand expression's value
      SquarePwl,  // tangent-line under-approximation of operand^2
      Abs,        // |operand|
      RhoK,       // max(operand 0, operand 1)
      RhoKBranch  // binary: 1 iff operand 1 exceeds operand 0 (NaN-tolerant)
    };
    milp::VarId var;
    Kind kind = Kind::Const;
    std::vector<milp::LinExpr> exprs;
    double p0 = 0.0;  // Const value; SquarePwl interval low
    double p1 = 0.0;  // SquarePwl interval high
    int i0 = 0;       // SelectMin/SelectMax arg index; SquarePwl segment count
  };
  std::vector<Recipe> recipes_;

  // Rewrites are cached so repeated encodings reuse the same variables:
  // original node -> negation normal form (kept alive here), and per
  // negated-Until node the normalised complements of its operands.
  std::map<const stl::Formula*, stl::FormulaPtr> nnf_;
  std::map<const stl::Formula*, std::pair<stl::FormulaPtr, stl::FormulaPtr>> until_neg_;

  struct RhoEntry {
    bool plus_inf = false;   // robustness of "true"
    bool minus_inf = false;  // robustness of "!true"
    milp::LinExpr expr;      // otherwise: value as an expression
    double lo = 0.0;         // interval bound on the true value
    double hi = 0.0;
    milp::VarId materialized;  // set once the entry is pinned to a variable
  };
  // Key: node, time, mode (RhoMode / BoolMode as int).
  std::map<std::tuple<const stl::Formula*, int, int>, RhoEntry> rho_cache_;
  std::map<std::tuple<const stl::Formula*, int, int>, milp::VarId> bool_cache_;
  std::optional<milp::LinExpr> effort_;
  int serial_ = 0;  // suffix for generated variable names

  friend struct Encoder;
};

/// z such that z = 1 forces mu(x_t) >= epsilon and z = 0 forces
/// mu(x_t) <= -epsilon, via the two rows
///   mu(x_t) <= M z - epsilon and -mu(x_t) <= M (1 - z) - epsilon
/// with the tightest M the state bounds allow. Values of mu strictly
/// inside (-epsilon, epsilon) admit no z at all; callers that only need
/// the forcing direction use encode_bool with BoolMode::Force instead.
/// Throws ConfigError when the required M exceeds options().big_m.
milp::VarId encode_predicate(EncodingContext& ctx, const stl::Predicate& mu, int t);

/// Binary z for satisfaction of phi at instant t, over the standard
/// recursive scheme: conjunction z = min(z_i) via z <= z_i and
/// z >= sum z_i - (n-1); disjunction z = max(z_i) via z >= z_i and
/// z <= sum z_i; negation via z = 1 - z'; Until unrolled as a disjunction
/// over witness instants of chained conjunctions. The formula is pushed to
/// negation normal form first. Throws InputError when t + horizon exceeds
/// the scenario horizon.
milp::VarId encode_bool(EncodingContext& ctx, const stl::FormulaPtr& phi, int t,
                        BoolMode mode = BoolMode::Exact);

/// Continuous rho equal (Exact) or one-sidedly bounded (Under/Over) to the
/// robustness of phi at t. Min/max nodes use selector binaries s_i with
/// rows rho <= r_i, rho >= r_i - M(1-s_i), sum s_i = 1 (min; dual for max)
/// where M is the tightest interval-arithmetic constant. The robustness of
/// "true" is folded as +infinity through min/max and clamped to the big-M
/// cap only if it survives to the root.
milp::VarId encode_robustness(EncodingContext& ctx, const stl::FormulaPtr& phi, int t,
                              RhoMode mode = RhoMode::Exact);

/// rho^K = max[k - J_S, -rho_phiF] via the six rows
///   rho^K >= k - J_S                rho^K >= -rho_phiF
///   k - J_S - bM <= rho^K <= k - J_S + bM
///   -rho_phiF - (1-b)M <= rho^K <= -rho_phiF + (1-b)M
/// with one selector binary b (b = 0 pins the cost branch). Requires k,
/// the expression j_s, and rho_phiF to carry finite bounds.
milp::VarId encode_rhoK(EncodingContext& ctx, milp::VarId k, const milp::LinExpr& j_s,
                        milp::VarId rho_phiF);

/// sum_t norm(uL_t) per the scenario's cost spec, as an expression over
/// fresh effort variables (or a constant when the leader channel is
/// fixed). SquaredPwl builds, per input component, the maximum of evenly
/// spaced tangent lines of u^2 over the input interval — an
/// under-approximation that is exact at the tangent points and at 0 — so
/// any objective that pays for effort never overstates it. L1 uses the
/// usual two-sided absolute-value rows. Encoded once per context.
milp::LinExpr encode_effort(EncodingContext& ctx);

/// J_S = effort_weight * encode_effort - [flag] * rho(phi_L at 0), with
/// the robustness term encoded in the given mode.
milp::LinExpr encode_cost(EncodingContext& ctx, const dyn::CostSpec& cost,
                          RhoMode mode = RhoMode::Exact);

/// The single row z_L >= z_F.
void encode_implication(EncodingContext& ctx, milp::VarId z_L, milp::VarId z_F);

/// Value of the tangent-line relaxation of u^2 at v: the max over s+1
/// evenly spaced tangents of u^2 on [lo, up]. Exact at the tangent points;
/// below v^2 by at most ((up-lo)/segments)^2 / 4 in between. Numeric mirror
/// of the rows encode_effort emits, shared so cost measures computed
/// outside a model agree with the MILP's.
double pwl_square_value(double v, double lo, double up, int segments);

/// [lo, hi] of expr under the model's current variable bounds.
std::pair<double, double> expr_interval(const milp::MilpModel& model,
                                        const milp::LinExpr& expr);

}  // namespace stlgame::enc
