#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "stlgame/errors.hpp"

namespace stlgame::stl {

/// Affine atomic predicate mu(x) = coeffs . x + offset, interpreted as
/// satisfied when mu(x) >= 0.
struct Predicate {
  Eigen::VectorXd coeffs;
  double offset = 0.0;

  Predicate() = default;
  Predicate(Eigen::VectorXd c, double off);

  double eval(const Eigen::VectorXd& x) const;
  /// Predicate for -mu, used when pushing negations to the leaves.
  Predicate negated() const;
};

enum class Op { True, Pred, Not, And, Or, Until, Eventually, Always };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Immutable formula node. Temporal intervals are integer step indices
/// with 0 <= a <= b. Shareable across threads once built.
class Formula {
 public:
  Op op() const { return op_; }
  const Predicate& pred() const { return pred_; }
  const std::vector<FormulaPtr>& children() const { return kids_; }
  const FormulaPtr& child(std::size_t i) const { return kids_[i]; }
  int lo() const { return a_; }
  int hi() const { return b_; }

  /// Smallest N such that satisfaction at time 0 depends only on x_0..x_N.
  int horizon() const { return horizon_; }

  bool is_temporal() const {
    return op_ == Op::Until || op_ == Op::Eventually || op_ == Op::Always;
  }

  /// Canonical concrete syntax; re-parsing it reproduces this AST.
  std::string to_string(const std::vector<std::string>& names) const;

  static bool equal(const Formula& x, const Formula& y);

  // Constructors. And/Or require at least one child.
  static FormulaPtr make_true();
  static FormulaPtr make_pred(Predicate p);
  static FormulaPtr make_not(FormulaPtr f);
  static FormulaPtr make_and(std::vector<FormulaPtr> fs);
  static FormulaPtr make_or(std::vector<FormulaPtr> fs);
  static FormulaPtr make_until(FormulaPtr lhs, FormulaPtr rhs, int a, int b);
  static FormulaPtr make_eventually(FormulaPtr f, int a, int b);
  static FormulaPtr make_always(FormulaPtr f, int a, int b);

 private:
  Formula() = default;

  Op op_ = Op::True;
  Predicate pred_;
  std::vector<FormulaPtr> kids_;
  int a_ = 0;
  int b_ = 0;
  int horizon_ = 0;
};

/// Push negations inward. Negations of predicates flip the predicate sign,
/// !F becomes G of the negation and vice versa, and double negations
/// cancel. A negated Until is kept as-is (there is no dual operator in the
/// AST); encoders complement it locally.
FormulaPtr to_nnf(const FormulaPtr& f);

/// State dimension implied by the predicates, or 0 if the formula has no
/// predicate. Throws InputError when predicates disagree.
int formula_dimension(const Formula& f);

}  // namespace stlgame::stl
