#include "stlgame/encode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "stlgame/numfmt.hpp"

namespace stlgame::enc {

using milp::LinExpr;
using milp::MilpModel;
using milp::Sense;
using milp::VarId;
using milp::VarKind;
using stl::Formula;
using stl::FormulaPtr;
using stl::Op;

Channel Channel::variables() { return Channel{}; }

Channel Channel::shared(std::vector<std::vector<milp::VarId>> ids) {
  Channel c;
  c.kind_ = Kind::Shared;
  c.ids_ = std::move(ids);
  return c;
}

Channel Channel::fixed(std::vector<Eigen::VectorXd> values) {
  Channel c;
  c.kind_ = Kind::Fixed;
  c.values_ = std::move(values);
  return c;
}

std::pair<double, double> expr_interval(const MilpModel& model, const LinExpr& expr) {
  double lo = expr.constant();
  double hi = lo;
  for (const milp::LinTerm& term : expr.terms()) {
    const milp::Variable& v = model.variable(term.var);
    const double a = term.coeff * v.lower;
    const double b = term.coeff * v.upper;
    lo += std::min(a, b);
    hi += std::max(a, b);
  }
  return {lo, hi};
}

namespace {

std::string bracket(int a) { return "[" + std::to_string(a) + "]"; }
std::string bracket(int a, int b) {
  return "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
}

}  // namespace

EncodingContext::EncodingContext(milp::MilpModel& model, const dyn::Scenario& sc,
                                 Channel leader, Channel follower, EncodeOptions opts)
    : model_(&model), sc_(&sc), opts_(std::move(opts)) {
  if (!std::isfinite(opts_.big_m) || opts_.big_m <= 0.0) {
    throw ConfigError("big-M must be a positive real");
  }
  if (!std::isfinite(opts_.epsilon) || opts_.epsilon <= 0.0 ||
      opts_.epsilon >= opts_.big_m) {
    throw ConfigError("epsilon must satisfy 0 < epsilon < big-M");
  }
  const int n = sc.system.n();
  const int N = sc.N;

  x_.resize(static_cast<std::size_t>(N) + 1);
  for (int t = 0; t <= N; ++t) {
    x_[static_cast<std::size_t>(t)].reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      const double lo = t == 0 ? sc.x0[i] : sc.state_bounds.lower[i];
      const double up = t == 0 ? sc.x0[i] : sc.state_bounds.upper[i];
      x_[static_cast<std::size_t>(t)].push_back(
          model.add_continuous(lo, up, opts_.prefix + "x" + bracket(t, i)));
    }
  }

  auto setup = [&](Channel& ch, const dyn::BoundsBox& box, int m, const char* stem,
                   std::vector<std::vector<VarId>>& vars,
                   std::vector<Eigen::VectorXd>& fixed, bool& is_fixed,
                   bool& is_shared) {
    if (m == 0) {  // degenerate channel: nothing to create
      is_fixed = true;
      fixed.assign(static_cast<std::size_t>(N), Eigen::VectorXd(0));
      return;
    }
    switch (ch.kind_) {
      case Channel::Kind::Variables:
        vars.resize(static_cast<std::size_t>(N));
        for (int t = 0; t < N; ++t) {
          for (int j = 0; j < m; ++j) {
            vars[static_cast<std::size_t>(t)].push_back(model.add_continuous(
                box.lower[j], box.upper[j], opts_.prefix + stem + bracket(t, j)));
          }
        }
        return;
      case Channel::Kind::Shared: {
        if (static_cast<int>(ch.ids_.size()) != N) {
          throw InputError(std::string(stem) + " shared channel must list N instants");
        }
        for (const auto& row : ch.ids_) {
          if (static_cast<int>(row.size()) != m) {
            throw InputError(std::string(stem) + " shared channel has a wrong arity");
          }
          for (VarId id : row) {
            if (!id.valid() || id.index >= model.num_variables()) {
              throw InputError(std::string(stem) +
                               " shared channel references an unknown variable");
            }
          }
        }
        vars = std::move(ch.ids_);
        is_shared = true;
        return;
      }
      case Channel::Kind::Fixed: {
        if (static_cast<int>(ch.values_.size()) != N) {
          throw InputError(std::string(stem) + " fixed channel must list N inputs");
        }
        for (const Eigen::VectorXd& v : ch.values_) {
          if (static_cast<int>(v.size()) != m || !box.contains(v, 1e-6)) {
            throw InputError(std::string(stem) +
                             " fixed channel leaves its input bounds");
          }
        }
        fixed = std::move(ch.values_);
        is_fixed = true;
        return;
      }
    }
  };
  setup(leader, sc.leader_bounds, sc.system.m_L(), "uL", uL_, uL_fixed_, leader_fixed_,
        leader_shared_);
  setup(follower, sc.follower_bounds, sc.system.m_F(), "uF", uF_, uF_fixed_,
        follower_fixed_, follower_shared_);

  // x_{t+1} = A x_t + B_L uL_t + B_F uF_t + c, one equality row per state
  // component and step; fixed channels fold into the right-hand side.
  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < n; ++i) {
      LinExpr e;
      e.add(x_[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(i)], 1.0);
      for (int j = 0; j < n; ++j) {
        const double a = sc.system.A(i, j);
        if (a != 0.0) e.add(x_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)], -a);
      }
      double rhs = sc.system.c[i];
      for (int j = 0; j < sc.system.m_L(); ++j) {
        const double b = sc.system.B_L(i, j);
        if (b == 0.0) continue;
        if (leader_fixed_) {
          rhs += b * uL_fixed_[static_cast<std::size_t>(t)][j];
        } else {
          e.add(uL_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)], -b);
        }
      }
      for (int j = 0; j < sc.system.m_F(); ++j) {
        const double b = sc.system.B_F(i, j);
        if (b == 0.0) continue;
        if (follower_fixed_) {
          rhs += b * uF_fixed_[static_cast<std::size_t>(t)][j];
        } else {
          e.add(uF_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)], -b);
        }
      }
      model.add_constraint(e, Sense::Eq, rhs, opts_.prefix + "dyn" + bracket(t, i));
    }
  }
}

VarId EncodingContext::state_var(int t, int i) const {
  if (t < 0 || t > sc_->N || i < 0 || i >= sc_->system.n()) {
    throw InternalError("state index outside the horizon");
  }
  return x_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
}

LinExpr EncodingContext::leader_input(int t, int j) const {
  if (t < 0 || t >= sc_->N || j < 0 || j >= sc_->system.m_L()) {
    throw InternalError("leader input index outside the horizon");
  }
  if (leader_fixed_) return LinExpr(uL_fixed_[static_cast<std::size_t>(t)][j]);
  return LinExpr(uL_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
}

LinExpr EncodingContext::follower_input(int t, int j) const {
  if (t < 0 || t >= sc_->N || j < 0 || j >= sc_->system.m_F()) {
    throw InternalError("follower input index outside the horizon");
  }
  if (follower_fixed_) return LinExpr(uF_fixed_[static_cast<std::size_t>(t)][j]);
  return LinExpr(uF_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)]);
}

const std::vector<std::vector<VarId>>& EncodingContext::leader_vars() const {
  if (leader_fixed_) throw InternalError("leader channel is fixed, not variables");
  return uL_;
}

const std::vector<std::vector<VarId>>& EncodingContext::follower_vars() const {
  if (follower_fixed_) throw InternalError("follower channel is fixed, not variables");
  return uF_;
}

/// All encoding logic lives here; the context only stores state. One
/// Encoder is built per operation call and works on the borrowed context.
struct Encoder {
  EncodingContext& ctx;
  MilpModel& m;
  const dyn::Scenario& sc;
  using Entry = EncodingContext::RhoEntry;
  using Key = std::tuple<const Formula*, int, int>;

  explicit Encoder(EncodingContext& c) : ctx(c), m(*c.model_), sc(*c.sc_) {}

  std::string fresh(const char* stem, int t = -1) {
    std::string s = ctx.opts_.prefix + stem + std::to_string(ctx.serial_++);
    if (t >= 0) s += bracket(t);
    return s;
  }

  using Recipe = EncodingContext::Recipe;

  /// Log how to recompute `v` from a trajectory (see propose_assignment).
  void rec(VarId v, Recipe::Kind kind, std::vector<LinExpr> exprs = {},
           double p0 = 0.0, double p1 = 0.0, int i0 = 0) {
    ctx.recipes_.push_back(Recipe{v, kind, std::move(exprs), p0, p1, i0});
  }

  double checked_m(double required, const char* what) const {
    required = std::max(required, 0.0);
    if (!(required <= ctx.opts_.big_m)) {
      throw ConfigError(std::string(what) + " needs big-M " + format_double(required) +
                        ", above the configured cap " +
                        format_double(ctx.opts_.big_m));
    }
    return required;
  }

  FormulaPtr nnf_of(const FormulaPtr& f) {
    auto it = ctx.nnf_.find(f.get());
    if (it != ctx.nnf_.end()) return it->second;
    FormulaPtr g = stl::to_nnf(f);
    ctx.nnf_.emplace(f.get(), g);
    return g;
  }

  void check_window(const FormulaPtr& f, int t) const {
    if (!f) throw InputError("cannot encode a null formula");
    if (t < 0 || t + f->horizon() > sc.N) {
      throw InputError("horizon overflow: formula needs instants up to " +
                       std::to_string(t + f->horizon()) + " on a horizon of " +
                       std::to_string(sc.N));
    }
  }

  LinExpr pred_expr(const stl::Predicate& mu, int t) {
    if (static_cast<int>(mu.coeffs.size()) != sc.system.n()) {
      throw InputError("predicate references " + std::to_string(mu.coeffs.size()) +
                       " state components, system has " +
                       std::to_string(sc.system.n()));
    }
    LinExpr e(mu.offset);
    for (int i = 0; i < sc.system.n(); ++i) {
      if (mu.coeffs[i] != 0.0) e.add(ctx.state_var(t, i), mu.coeffs[i]);
    }
    return e;
  }

  // ---- Boolean encoding -------------------------------------------------

  VarId predicate(const stl::Predicate& mu, int t, bool force_only) {
    if (t < 0 || t > sc.N) throw InputError("predicate instant outside the horizon");
    LinExpr e = pred_expr(mu, t);
    auto [lo, hi] = expr_interval(m, e);
    const double eps = ctx.opts_.epsilon;
    // Tightest constant that makes the slack side of each row vacuous over
    // the reachable range of mu.
    double required = eps - lo;
    if (!force_only) required = std::max(required, hi + eps);
    const double big = checked_m(required, "predicate encoding");
    VarId z = m.add_binary(fresh("zp", t));
    rec(z, Recipe::Kind::TruthGe, {e}, eps);
    {
      // -mu(x_t) <= M (1 - z) - eps: selecting z = 1 forces mu >= eps.
      LinExpr row;
      row -= e;
      row.add(z, big);
      m.add_constraint(row, Sense::Le, big - eps);
    }
    if (!force_only) {
      // mu(x_t) <= M z - eps: selecting z = 0 forces mu <= -eps.
      LinExpr row = e;
      row.add(z, -big);
      m.add_constraint(row, Sense::Le, -eps);
    }
    return z;
  }

  VarId fixed_bit(int value, int t) {
    const double v = value ? 1.0 : 0.0;
    VarId z = m.add_variable(VarKind::Binary, v, v, fresh("z", t));
    rec(z, Recipe::Kind::Const, {}, v);
    return z;
  }

  static std::vector<LinExpr> as_exprs(const std::vector<VarId>& zs) {
    std::vector<LinExpr> ops;
    ops.reserve(zs.size());
    for (VarId zi : zs) ops.emplace_back(zi);
    return ops;
  }

  VarId bool_and(const std::vector<VarId>& zs, int t, bool exact) {
    if (zs.size() == 1) return zs[0];
    VarId z = m.add_binary(fresh("z", t));
    rec(z, Recipe::Kind::Min, as_exprs(zs));
    LinExpr sum;
    for (VarId zi : zs) {
      LinExpr row;  // z <= z_i
      row.add(z, 1.0);
      row.add(zi, -1.0);
      m.add_constraint(row, Sense::Le, 0.0);
      sum.add(zi, 1.0);
    }
    if (exact) {  // z >= sum z_i - (n - 1)
      sum.add(z, -1.0);
      m.add_constraint(sum, Sense::Le, static_cast<double>(zs.size()) - 1.0);
    }
    return z;
  }

  VarId bool_or(const std::vector<VarId>& zs, int t, bool exact) {
    if (zs.size() == 1) return zs[0];
    VarId z = m.add_binary(fresh("z", t));
    rec(z, Recipe::Kind::Max, as_exprs(zs));
    LinExpr row;  // z <= sum z_i
    row.add(z, 1.0);
    for (VarId zi : zs) {
      row.add(zi, -1.0);
      if (exact) {  // z >= z_i
        LinExpr up;
        up.add(zi, 1.0);
        up.add(z, -1.0);
        m.add_constraint(up, Sense::Le, 0.0);
      }
    }
    m.add_constraint(row, Sense::Le, 0.0);
    return z;
  }

  std::pair<FormulaPtr, FormulaPtr> negated_operands(const FormulaPtr& until) {
    auto it = ctx.until_neg_.find(until.get());
    if (it != ctx.until_neg_.end()) return it->second;
    auto p = std::make_pair(stl::to_nnf(Formula::make_not(until->child(0))),
                            stl::to_nnf(Formula::make_not(until->child(1))));
    ctx.until_neg_.emplace(until.get(), p);
    return p;
  }

  // "phi U psi fails": every witness instant either misses psi or the left
  // operand already failed somewhere in the closed window up to it.
  VarId not_until_force(const FormulaPtr& u, int t) {
    auto [nphi, npsi] = negated_operands(u);
    const int a = u->lo(), b = u->hi();
    VarId broke = boolean(nphi, t, BoolMode::Force);
    for (int s = t + 1; s <= t + a; ++s) {
      broke = bool_or({broke, boolean(nphi, s, BoolMode::Force)}, t, false);
    }
    std::vector<VarId> conj;
    for (int tp = t + a;;) {
      conj.push_back(bool_or({boolean(npsi, tp, BoolMode::Force), broke}, t, false));
      if (++tp > t + b) break;
      broke = bool_or({broke, boolean(nphi, tp, BoolMode::Force)}, t, false);
    }
    return bool_and(conj, t, false);
  }

  VarId boolean(const FormulaPtr& f, int t, BoolMode mode) {
    const Key key{f.get(), t, static_cast<int>(mode)};
    auto it = ctx.bool_cache_.find(key);
    if (it != ctx.bool_cache_.end()) return it->second;
    const bool exact = mode == BoolMode::Exact;
    VarId z;
    switch (f->op()) {
      case Op::True:
        z = fixed_bit(1, t);
        break;
      case Op::Pred:
        z = predicate(f->pred(), t, !exact);
        break;
      case Op::Not: {
        const FormulaPtr& g = f->child(0);
        if (g->op() == Op::True) {
          z = fixed_bit(0, t);
        } else if (g->op() != Op::Until) {
          throw InternalError("unnormalised negation reached the encoder");
        } else if (exact) {
          VarId zu = boolean(g, t, mode);
          z = m.add_binary(fresh("z", t));
          rec(z, Recipe::Kind::OneMinus, {LinExpr(zu)});
          LinExpr row;  // z = 1 - z_until
          row.add(z, 1.0);
          row.add(zu, 1.0);
          m.add_constraint(row, Sense::Eq, 1.0);
        } else {
          z = not_until_force(g, t);
        }
        break;
      }
      case Op::And:
      case Op::Or: {
        std::vector<VarId> zs;
        zs.reserve(f->children().size());
        for (const FormulaPtr& c : f->children()) zs.push_back(boolean(c, t, mode));
        z = f->op() == Op::And ? bool_and(zs, t, exact) : bool_or(zs, t, exact);
        break;
      }
      case Op::Always:
      case Op::Eventually: {
        std::vector<VarId> zs;
        for (int s = t + f->lo(); s <= t + f->hi(); ++s) {
          zs.push_back(boolean(f->child(0), s, mode));
        }
        z = f->op() == Op::Always ? bool_and(zs, t, exact) : bool_or(zs, t, exact);
        break;
      }
      case Op::Until: {
        // Disjunction over witness instants t' of (psi at t') and (phi on
        // all of [t, t']), with the running conjunction chained so each
        // extension adds one two-input gadget.
        const int a = f->lo(), b = f->hi();
        VarId chain = boolean(f->child(0), t, mode);
        for (int s = t + 1; s <= t + a; ++s) {
          chain = bool_and({chain, boolean(f->child(0), s, mode)}, t, exact);
        }
        std::vector<VarId> args;
        for (int tp = t + a;;) {
          args.push_back(bool_and({boolean(f->child(1), tp, mode), chain}, t, exact));
          if (++tp > t + b) break;
          chain = bool_and({chain, boolean(f->child(0), tp, mode)}, t, exact);
        }
        z = bool_or(args, t, exact);
        break;
      }
    }
    ctx.bool_cache_.emplace(key, z);
    return z;
  }

  // ---- Robustness encoding ----------------------------------------------

  static RhoMode flipped(RhoMode mode) {
    switch (mode) {
      case RhoMode::Exact: return RhoMode::Exact;
      case RhoMode::Under: return RhoMode::Over;
      case RhoMode::Over: return RhoMode::Under;
    }
    return RhoMode::Exact;
  }

  static int rho_key_mode(RhoMode mode) { return static_cast<int>(mode); }

  Entry make_expr_entry(LinExpr e) const {
    Entry out;
    out.expr = std::move(e);
    std::tie(out.lo, out.hi) = expr_interval(m, out.expr);
    return out;
  }

  /// min/max gadget over already-encoded arguments with infinity folding.
  Entry combine(const std::vector<Entry>& args, bool is_min, RhoMode mode, int t) {
    std::vector<const Entry*> kept;
    for (const Entry& a : args) {
      if (is_min) {
        if (a.plus_inf) continue;  // min(+inf, r) = r
        if (a.minus_inf) return a;
      } else {
        if (a.minus_inf) continue;
        if (a.plus_inf) return a;
      }
      kept.push_back(&a);
    }
    if (kept.empty()) {
      Entry e;
      (is_min ? e.plus_inf : e.minus_inf) = true;
      return e;
    }
    if (kept.size() == 1) return *kept[0];

    double lo = kept[0]->lo, hi = kept[0]->hi;
    double span_lo = kept[0]->lo, span_hi = kept[0]->hi;
    for (std::size_t i = 1; i < kept.size(); ++i) {
      lo = is_min ? std::min(lo, kept[i]->lo) : std::max(lo, kept[i]->lo);
      hi = is_min ? std::min(hi, kept[i]->hi) : std::max(hi, kept[i]->hi);
      span_lo = std::min(span_lo, kept[i]->lo);
      span_hi = std::max(span_hi, kept[i]->hi);
    }
    const double big = checked_m(span_hi - span_lo, is_min ? "min gadget" : "max gadget");

    // Exact keeps both halves. Under keeps only constraints bounding rho
    // from above; Over only those bounding it from below.
    const bool plain_rows = is_min ? mode != RhoMode::Over : mode != RhoMode::Under;
    const bool selectors = is_min ? mode != RhoMode::Under : mode != RhoMode::Over;

    VarId rho = m.add_continuous(lo, hi, fresh("rho", t));
    std::vector<LinExpr> ops;
    ops.reserve(kept.size());
    for (const Entry* a : kept) ops.push_back(a->expr);
    rec(rho, is_min ? Recipe::Kind::Min : Recipe::Kind::Max, ops);
    LinExpr ssum;
    int arg = 0;
    for (const Entry* a : kept) {
      if (plain_rows) {  // min: rho <= r_i; max: rho >= r_i
        LinExpr row;
        row.add(rho, 1.0);
        row -= a->expr;
        m.add_constraint(row, is_min ? Sense::Le : Sense::Ge, 0.0);
      }
      if (selectors) {
        // min: rho >= r_i - M(1-s_i); max: rho <= r_i + M(1-s_i)
        VarId s = m.add_binary(fresh("s", t));
        rec(s, is_min ? Recipe::Kind::SelectMin : Recipe::Kind::SelectMax, ops, 0.0,
            0.0, arg);
        ssum.add(s, 1.0);
        LinExpr row;
        row.add(rho, 1.0);
        row -= a->expr;
        row.add(s, is_min ? -big : big);
        m.add_constraint(row, is_min ? Sense::Ge : Sense::Le, is_min ? -big : big);
      }
      ++arg;
    }
    if (selectors) m.add_constraint(ssum, Sense::Eq, 1.0);

    Entry out;
    out.expr = LinExpr(rho);
    out.lo = lo;
    out.hi = hi;
    return out;
  }

  Entry rho_term(const FormulaPtr& f, int t, RhoMode mode) {
    const Key key{f.get(), t, rho_key_mode(mode)};
    auto it = ctx.rho_cache_.find(key);
    if (it != ctx.rho_cache_.end()) return it->second;
    Entry e = rho_uncached(f, t, mode);
    ctx.rho_cache_.emplace(key, e);
    return e;
  }

  Entry rho_uncached(const FormulaPtr& f, int t, RhoMode mode) {
    switch (f->op()) {
      case Op::True: {
        Entry e;
        e.plus_inf = true;
        return e;
      }
      case Op::Pred:
        return make_expr_entry(pred_expr(f->pred(), t));
      case Op::Not: {
        const FormulaPtr& g = f->child(0);
        if (g->op() == Op::True) {
          Entry e;
          e.minus_inf = true;
          return e;
        }
        Entry inner = rho_term(g, t, flipped(mode));
        Entry e;
        e.plus_inf = inner.minus_inf;
        e.minus_inf = inner.plus_inf;
        e.expr -= inner.expr;
        e.lo = -inner.hi;
        e.hi = -inner.lo;
        return e;
      }
      case Op::And:
      case Op::Or: {
        std::vector<Entry> args;
        args.reserve(f->children().size());
        for (const FormulaPtr& c : f->children()) args.push_back(rho_term(c, t, mode));
        return combine(args, f->op() == Op::And, mode, t);
      }
      case Op::Always:
      case Op::Eventually: {
        std::vector<Entry> args;
        for (int s = t + f->lo(); s <= t + f->hi(); ++s) {
          args.push_back(rho_term(f->child(0), s, mode));
        }
        return combine(args, f->op() == Op::Always, mode, t);
      }
      case Op::Until: {
        // max over witness instants of min(rho_psi(t'), running min of
        // rho_phi over [t, t']), the running min chained two at a time.
        const int a = f->lo(), b = f->hi();
        Entry chain = rho_term(f->child(0), t, mode);
        for (int s = t + 1; s <= t + a; ++s) {
          chain = combine({chain, rho_term(f->child(0), s, mode)}, true, mode, t);
        }
        std::vector<Entry> args;
        for (int tp = t + a;;) {
          args.push_back(
              combine({rho_term(f->child(1), tp, mode), chain}, true, mode, t));
          if (++tp > t + b) break;
          chain = combine({chain, rho_term(f->child(0), tp, mode)}, true, mode, t);
        }
        return combine(args, false, mode, t);
      }
    }
    throw InternalError("unreachable formula op in the encoder");
  }

  VarId rho_root(const FormulaPtr& f, int t, RhoMode mode) {
    rho_term(f, t, mode);  // ensure the cache entry exists
    Entry& e = ctx.rho_cache_[Key{f.get(), t, rho_key_mode(mode)}];
    if (e.materialized.valid()) return e.materialized;
    if (!e.plus_inf && !e.minus_inf && e.expr.constant() == 0.0 &&
        e.expr.terms().size() == 1 && e.expr.terms()[0].coeff == 1.0) {
      e.materialized = e.expr.terms()[0].var;
      return e.materialized;
    }
    if (e.plus_inf || e.minus_inf) {
      // The robustness of "true" is unbounded; stand in with the cap.
      const double v = e.plus_inf ? ctx.opts_.big_m : -ctx.opts_.big_m;
      e.materialized = m.add_continuous(v, v, fresh("rho", t));
      rec(e.materialized, Recipe::Kind::Const, {}, v);
      return e.materialized;
    }
    VarId rho = m.add_continuous(e.lo, e.hi, fresh("rho", t));
    rec(rho, Recipe::Kind::Expr, {e.expr});
    LinExpr row;
    row.add(rho, 1.0);
    row -= e.expr;
    switch (mode) {
      case RhoMode::Exact: m.add_constraint(row, Sense::Eq, 0.0); break;
      case RhoMode::Under: m.add_constraint(row, Sense::Le, 0.0); break;
      case RhoMode::Over: m.add_constraint(row, Sense::Ge, 0.0); break;
    }
    e.materialized = rho;
    return rho;
  }

  // ---- Effort -------------------------------------------------------------

  // Evenly spaced tangent points of u^2 over [lo, up]; 0 enters through the
  // variable's zero lower bound, keeping the approximation exact there.
  static std::vector<double> tangent_points(double lo, double up, int segments) {
    std::vector<double> pts;
    if (lo == up) {
      pts.push_back(lo);
      return pts;
    }
    for (int k = 0; k <= segments; ++k) {
      pts.push_back(lo + (up - lo) * static_cast<double>(k) /
                             static_cast<double>(segments));
    }
    return pts;
  }

  static double pwl_square(double v, double lo, double up, int segments) {
    return pwl_square_value(v, lo, up, segments);
  }

  LinExpr effort() {
    if (ctx.effort_) return *ctx.effort_;
    const dyn::CostSpec& cost = sc.cost;
    const dyn::BoundsBox& box = sc.leader_bounds;
    LinExpr total;
    for (int t = 0; t < sc.N; ++t) {
      for (int j = 0; j < sc.system.m_L(); ++j) {
        const double lo = box.lower[j], up = box.upper[j];
        if (ctx.leader_fixed_) {
          const double v = ctx.uL_fixed_[static_cast<std::size_t>(t)][j];
          total += cost.norm == dyn::EffortNorm::SquaredPwl
                       ? pwl_square(v, lo, up, cost.pwl_segments)
                       : std::abs(v);
          continue;
        }
        VarId u = ctx.uL_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
        if (cost.norm == dyn::EffortNorm::SquaredPwl) {
          VarId e = m.add_continuous(0.0, std::max(lo * lo, up * up),
                                     ctx.opts_.prefix + "eff" + bracket(t, j));
          rec(e, Recipe::Kind::SquarePwl, {LinExpr(u)}, lo, up, cost.pwl_segments);
          for (double p : tangent_points(lo, up, cost.pwl_segments)) {
            LinExpr row;  // e >= 2 p u - p^2
            row.add(e, 1.0);
            row.add(u, -2.0 * p);
            m.add_constraint(row, Sense::Ge, -p * p);
          }
          total.add(e, 1.0);
        } else {
          VarId e = m.add_continuous(0.0, std::max(std::abs(lo), std::abs(up)),
                                     ctx.opts_.prefix + "eff" + bracket(t, j));
          rec(e, Recipe::Kind::Abs, {LinExpr(u)});
          LinExpr pos;  // e >= u
          pos.add(e, 1.0);
          pos.add(u, -1.0);
          m.add_constraint(pos, Sense::Ge, 0.0);
          LinExpr neg;  // e >= -u
          neg.add(e, 1.0);
          neg.add(u, 1.0);
          m.add_constraint(neg, Sense::Ge, 0.0);
          total.add(e, 1.0);
        }
      }
    }
    ctx.effort_ = total;
    return total;
  }
};

void EncodingContext::propose_assignment(
    std::vector<double>& values, std::vector<std::pair<VarId, double>>& proposals,
    const std::vector<Eigen::VectorXd>& u_L,
    const std::vector<Eigen::VectorXd>& u_F) const {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const int n = sc_->system.n();
  const int N = sc_->N;
  if (values.size() < static_cast<std::size_t>(model_->num_variables())) {
    values.resize(static_cast<std::size_t>(model_->num_variables()), nan);
  }

  // The inputs this context rolls forward: stored values for a fixed
  // channel, the caller's sequence for an owned one (also written into
  // `values`), and for a shared channel whatever the owning context wrote.
  auto resolve = [&](bool is_fixed, const std::vector<Eigen::VectorXd>& fixed,
                     const std::vector<std::vector<VarId>>& vars,
                     const std::vector<Eigen::VectorXd>& given, int m,
                     const char* side) -> std::vector<Eigen::VectorXd> {
    if (is_fixed) {
      if (!given.empty()) {
        throw InputError(std::string(side) + " inputs supplied for a fixed channel");
      }
      return fixed;
    }
    if (!given.empty()) {
      if (static_cast<int>(given.size()) != N) {
        throw InputError(std::string(side) + " inputs must list N instants");
      }
      std::vector<Eigen::VectorXd> out(given.begin(), given.end());
      for (int t = 0; t < N; ++t) {
        if (static_cast<int>(out[static_cast<std::size_t>(t)].size()) != m) {
          throw InputError(std::string(side) + " inputs have a wrong arity");
        }
        for (int j = 0; j < m; ++j) {
          values[vars[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)].index] =
              out[static_cast<std::size_t>(t)][j];
        }
      }
      return out;
    }
    // No sequence given: read the shared variables back.
    std::vector<Eigen::VectorXd> out(static_cast<std::size_t>(N), Eigen::VectorXd(m));
    for (int t = 0; t < N; ++t) {
      for (int j = 0; j < m; ++j) {
        const double v =
            values[vars[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)].index];
        if (std::isnan(v)) {
          throw InputError(std::string(side) +
                           " inputs are missing; evaluate the owning context first");
        }
        out[static_cast<std::size_t>(t)][j] = v;
      }
    }
    return out;
  };
  const std::vector<Eigen::VectorXd> uL =
      resolve(leader_fixed_, uL_fixed_, uL_, u_L, sc_->system.m_L(), "leader");
  const std::vector<Eigen::VectorXd> uF =
      resolve(follower_fixed_, uF_fixed_, uF_, u_F, sc_->system.m_F(), "follower");

  Eigen::VectorXd x = sc_->x0;
  for (int i = 0; i < n; ++i) values[x_[0][static_cast<std::size_t>(i)].index] = x[i];
  for (int t = 0; t < N; ++t) {
    x = sc_->system.A * x + sc_->system.B_L * uL[static_cast<std::size_t>(t)] +
        sc_->system.B_F * uF[static_cast<std::size_t>(t)] + sc_->system.c;
    for (int i = 0; i < n; ++i) {
      values[x_[static_cast<std::size_t>(t) + 1][static_cast<std::size_t>(i)].index] = x[i];
    }
  }

  // Unknown values poison everything they touch, except that a variable
  // pinned by its bounds (a constant in disguise) evaluates to that bound.
  auto eval = [&](const LinExpr& e) -> double {
    double v = e.constant();
    for (const milp::LinTerm& term : e.terms()) {
      double xv = values[term.var.index];
      if (std::isnan(xv)) {
        const milp::Variable& var = model_->variable(term.var);
        if (var.lower != var.upper) return nan;
        xv = var.lower;
      }
      v += term.coeff * xv;
    }
    return v;
  };

  for (const Recipe& r : recipes_) {
    double v = nan;
    switch (r.kind) {
      case Recipe::Kind::Const:
        v = r.p0;
        break;
      case Recipe::Kind::TruthGe: {
        const double e = eval(r.exprs[0]);
        if (!std::isnan(e)) v = e >= r.p0 ? 1.0 : 0.0;
        break;
      }
      case Recipe::Kind::Min:
      case Recipe::Kind::Max: {
        const bool is_min = r.kind == Recipe::Kind::Min;
        v = eval(r.exprs[0]);
        for (std::size_t i = 1; i < r.exprs.size() && !std::isnan(v); ++i) {
          const double e = eval(r.exprs[i]);
          v = std::isnan(e) ? e : (is_min ? std::min(v, e) : std::max(v, e));
        }
        break;
      }
      case Recipe::Kind::OneMinus: {
        const double e = eval(r.exprs[0]);
        if (!std::isnan(e)) v = 1.0 - e;
        break;
      }
      case Recipe::Kind::SelectMin:
      case Recipe::Kind::SelectMax: {
        const bool is_min = r.kind == Recipe::Kind::SelectMin;
        int best = 0;
        double bv = eval(r.exprs[0]);
        for (std::size_t i = 1; i < r.exprs.size() && !std::isnan(bv); ++i) {
          const double e = eval(r.exprs[i]);
          if (std::isnan(e)) {
            bv = e;
          } else if (is_min ? e < bv : e > bv) {
            bv = e;
            best = static_cast<int>(i);
          }
        }
        if (!std::isnan(bv)) v = best == r.i0 ? 1.0 : 0.0;
        break;
      }
      case Recipe::Kind::Expr:
        v = eval(r.exprs[0]);
        break;
      case Recipe::Kind::SquarePwl: {
        const double e = eval(r.exprs[0]);
        if (!std::isnan(e)) v = Encoder::pwl_square(e, r.p0, r.p1, r.i0);
        break;
      }
      case Recipe::Kind::Abs: {
        const double e = eval(r.exprs[0]);
        if (!std::isnan(e)) v = std::abs(e);
        break;
      }
      case Recipe::Kind::RhoK: {
        const double c = eval(r.exprs[0]);
        const double rr = eval(r.exprs[1]);
        if (!std::isnan(c) && !std::isnan(rr)) v = std::max(c, rr);
        break;
      }
      case Recipe::Kind::RhoKBranch: {
        // 1 selects the response branch. When the cost side is still
        // unknown (its bound variable is free), fall back to selecting the
        // response branch exactly when it is nonnegative on its own.
        const double c = eval(r.exprs[0]);
        const double rr = eval(r.exprs[1]);
        if (!std::isnan(rr)) v = (std::isnan(c) ? rr > 0.0 : rr > c) ? 1.0 : 0.0;
        break;
      }
    }
    values[r.var.index] = v;
    if (!std::isnan(v) && model_->variable(r.var).kind == milp::VarKind::Binary) {
      proposals.emplace_back(r.var, v);
    }
  }
}

VarId encode_predicate(EncodingContext& ctx, const stl::Predicate& mu, int t) {
  return Encoder(ctx).predicate(mu, t, false);
}

VarId encode_bool(EncodingContext& ctx, const FormulaPtr& phi, int t, BoolMode mode) {
  Encoder enc(ctx);
  enc.check_window(phi, t);
  return enc.boolean(enc.nnf_of(phi), t, mode);
}

VarId encode_robustness(EncodingContext& ctx, const FormulaPtr& phi, int t,
                        RhoMode mode) {
  Encoder enc(ctx);
  enc.check_window(phi, t);
  return enc.rho_root(enc.nnf_of(phi), t, mode);
}

VarId encode_rhoK(EncodingContext& ctx, VarId k, const LinExpr& j_s, VarId rho_phiF) {
  Encoder enc(ctx);
  MilpModel& m = ctx.model();
  LinExpr cost_arg;  // k - J_S
  cost_arg.add(k, 1.0);
  cost_arg -= j_s;
  LinExpr resp_arg;  // -rho_phiF
  resp_arg.add(rho_phiF, -1.0);
  auto [lo1, hi1] = expr_interval(m, cost_arg);
  auto [lo2, hi2] = expr_interval(m, resp_arg);
  const double big =
      enc.checked_m(std::max(hi1, hi2) - std::min(lo1, lo2), "rho^K gadget");
  VarId rho = m.add_continuous(std::max(lo1, lo2), std::max(hi1, hi2), enc.fresh("rhoK"));
  VarId b = m.add_binary(enc.fresh("bK"));
  enc.rec(rho, Encoder::Recipe::Kind::RhoK, {cost_arg, resp_arg});
  enc.rec(b, Encoder::Recipe::Kind::RhoKBranch, {cost_arg, resp_arg});
  auto row = [&](const LinExpr& arg, double bcoeff, Sense sense, double rhs) {
    LinExpr e;
    e.add(rho, 1.0);
    e -= arg;
    if (bcoeff != 0.0) e.add(b, bcoeff);
    m.add_constraint(e, sense, rhs);
  };
  row(cost_arg, 0.0, Sense::Ge, 0.0);     // rho^K >= k - J_S
  row(resp_arg, 0.0, Sense::Ge, 0.0);     // rho^K >= -rho_phiF
  row(cost_arg, big, Sense::Ge, 0.0);     // rho^K >= k - J_S - bM
  row(cost_arg, -big, Sense::Le, 0.0);    // rho^K <= k - J_S + bM
  row(resp_arg, -big, Sense::Ge, -big);   // rho^K >= -rho_phiF - (1-b)M
  row(resp_arg, big, Sense::Le, big);     // rho^K <= -rho_phiF + (1-b)M
  return rho;
}

double pwl_square_value(double v, double lo, double up, int segments) {
  double best = 0.0;
  for (double p : Encoder::tangent_points(lo, up, segments)) {
    best = std::max(best, 2.0 * p * v - p * p);
  }
  return best;
}

LinExpr encode_effort(EncodingContext& ctx) { return Encoder(ctx).effort(); }

LinExpr encode_cost(EncodingContext& ctx, const dyn::CostSpec& cost, RhoMode mode) {
  const dyn::CostSpec& own = ctx.scenario().cost;
  if (cost.norm != own.norm || cost.pwl_segments != own.pwl_segments) {
    throw InputError("cost spec differs from the scenario's effort shape");
  }
  LinExpr j = Encoder(ctx).effort();
  j *= cost.effort_weight;
  if (cost.include_leader_robustness) {
    VarId rho = encode_robustness(ctx, ctx.scenario().phi_L, 0, mode);
    LinExpr r;
    r.add(rho, -1.0);
    j += r;
  }
  return j;
}

void encode_implication(EncodingContext& ctx, VarId z_L, VarId z_F) {
  LinExpr row;  // z_L >= z_F
  row.add(z_L, 1.0);
  row.add(z_F, -1.0);
  ctx.model().add_constraint(row, Sense::Ge, 0.0,
                             Encoder(ctx).fresh("impl"));
}

}  // namespace stlgame::enc
