#include "stlgame/formula.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stlgame/numfmt.hpp"

namespace stlgame::stl {

namespace {

using stlgame::format_double;

void check_interval(int a, int b) {
  if (a < 0 || b < a) {
    throw InputError("temporal interval [" + std::to_string(a) + "," +
                     std::to_string(b) + "] must satisfy 0 <= a <= b");
  }
}

void check_child(const FormulaPtr& f) {
  if (!f) throw InternalError("null formula child");
}

}  // namespace

Predicate::Predicate(Eigen::VectorXd c, double off) : coeffs(std::move(c)), offset(off) {
  bool any = false;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] != 0.0) any = true;
  }
  if (!any) throw InputError("predicate must reference at least one state variable");
}

double Predicate::eval(const Eigen::VectorXd& x) const {
  if (x.size() != coeffs.size()) {
    throw InputError("predicate expects state of dimension " +
                     std::to_string(coeffs.size()) + ", got " + std::to_string(x.size()));
  }
  return coeffs.dot(x) + offset;
}

Predicate Predicate::negated() const {
  Predicate p;
  p.coeffs = -coeffs;
  p.offset = -offset;
  return p;
}

FormulaPtr Formula::make_true() {
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::True;
  return f;
}

FormulaPtr Formula::make_pred(Predicate p) {
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::Pred;
  f->pred_ = std::move(p);
  return f;
}

FormulaPtr Formula::make_not(FormulaPtr c) {
  check_child(c);
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::Not;
  f->horizon_ = c->horizon_;
  f->kids_.push_back(std::move(c));
  return f;
}

FormulaPtr Formula::make_and(std::vector<FormulaPtr> cs) {
  if (cs.empty()) throw InputError("conjunction needs at least one operand");
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::And;
  for (const auto& c : cs) {
    check_child(c);
    f->horizon_ = std::max(f->horizon_, c->horizon());
  }
  f->kids_ = std::move(cs);
  return f;
}

FormulaPtr Formula::make_or(std::vector<FormulaPtr> cs) {
  if (cs.empty()) throw InputError("disjunction needs at least one operand");
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::Or;
  for (const auto& c : cs) {
    check_child(c);
    f->horizon_ = std::max(f->horizon_, c->horizon());
  }
  f->kids_ = std::move(cs);
  return f;
}

FormulaPtr Formula::make_until(FormulaPtr lhs, FormulaPtr rhs, int a, int b) {
  check_child(lhs);
  check_child(rhs);
  check_interval(a, b);
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::Until;
  f->a_ = a;
  f->b_ = b;
  f->horizon_ = b + std::max(lhs->horizon(), rhs->horizon());
  f->kids_.push_back(std::move(lhs));
  f->kids_.push_back(std::move(rhs));
  return f;
}

FormulaPtr Formula::make_eventually(FormulaPtr c, int a, int b) {
  check_child(c);
  check_interval(a, b);
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::Eventually;
  f->a_ = a;
  f->b_ = b;
  f->horizon_ = b + c->horizon();
  f->kids_.push_back(std::move(c));
  return f;
}

FormulaPtr Formula::make_always(FormulaPtr c, int a, int b) {
  check_child(c);
  check_interval(a, b);
  auto f = std::shared_ptr<Formula>(new Formula());
  f->op_ = Op::Always;
  f->a_ = a;
  f->b_ = b;
  f->horizon_ = b + c->horizon();
  f->kids_.push_back(std::move(c));
  return f;
}

bool Formula::equal(const Formula& x, const Formula& y) {
  if (x.op_ != y.op_ || x.a_ != y.a_ || x.b_ != y.b_) return false;
  if (x.op_ == Op::Pred) {
    if (x.pred_.coeffs.size() != y.pred_.coeffs.size()) return false;
    if (x.pred_.offset != y.pred_.offset) return false;
    for (Eigen::Index i = 0; i < x.pred_.coeffs.size(); ++i) {
      if (x.pred_.coeffs[i] != y.pred_.coeffs[i]) return false;
    }
  }
  if (x.kids_.size() != y.kids_.size()) return false;
  for (std::size_t i = 0; i < x.kids_.size(); ++i) {
    if (!equal(*x.kids_[i], *y.kids_[i])) return false;
  }
  return true;
}

namespace {

// Precedence levels used by the printer; must mirror the parser. Atoms sit
// below the unary operators so that "!(x >= 0)" keeps its parentheses.
enum Level { kOr = 1, kAnd = 2, kUntil = 3, kAtom = 4, kUnary = 5, kPrimary = 6 };

int level_of(const Formula& f) {
  switch (f.op()) {
    case Op::Or:
      return kOr;
    case Op::And:
      return kAnd;
    case Op::Until:
      return kUntil;
    case Op::Pred:
      return kAtom;
    case Op::Not:
    case Op::Eventually:
    case Op::Always:
      return kUnary;
    default:
      return kPrimary;
  }
}

std::string print_pred(const Predicate& p, const std::vector<std::string>& names) {
  if (p.coeffs.size() > static_cast<Eigen::Index>(names.size())) {
    throw InputError("predicate references variable index " +
                     std::to_string(p.coeffs.size() - 1) + " but only " +
                     std::to_string(names.size()) + " names were given");
  }
  std::ostringstream out;
  bool first = true;
  for (Eigen::Index i = 0; i < p.coeffs.size(); ++i) {
    double c = p.coeffs[i];
    if (c == 0.0) continue;
    if (first) {
      if (c == -1.0) {
        out << "-";
      } else if (c != 1.0) {
        out << format_double(c) << "*";
      }
      first = false;
    } else {
      out << (c < 0.0 ? " - " : " + ");
      double a = std::abs(c);
      if (a != 1.0) out << format_double(a) << "*";
    }
    out << names[static_cast<std::size_t>(i)];
  }
  out << " >= " << format_double(-p.offset);
  return out.str();
}

void print_rec(const Formula& f, const std::vector<std::string>& names, int need,
               std::string& out) {
  const int lvl = level_of(f);
  const bool paren = lvl < need;
  if (paren) out += "(";
  switch (f.op()) {
    case Op::True:
      out += "true";
      break;
    case Op::Pred:
      out += print_pred(f.pred(), names);
      break;
    case Op::Not:
      out += "!";
      print_rec(*f.child(0), names, kUnary, out);
      break;
    case Op::Eventually:
    case Op::Always:
      out += (f.op() == Op::Eventually) ? "F[" : "G[";
      out += std::to_string(f.lo()) + "," + std::to_string(f.hi()) + "] ";
      print_rec(*f.child(0), names, kUnary, out);
      break;
    case Op::Until:
      // Right-associative: the left operand needs strictly higher precedence.
      print_rec(*f.child(0), names, kUnary, out);
      out += " U[" + std::to_string(f.lo()) + "," + std::to_string(f.hi()) + "] ";
      print_rec(*f.child(1), names, kUntil, out);
      break;
    case Op::And:
    case Op::Or: {
      const char* sep = (f.op() == Op::And) ? " & " : " | ";
      for (std::size_t i = 0; i < f.children().size(); ++i) {
        if (i) out += sep;
        // Children at the same level are parenthesised so that explicitly
        // nested conjunctions survive a print/parse round trip.
        print_rec(*f.child(i), names, lvl + 1, out);
      }
      break;
    }
  }
  if (paren) out += ")";
}

}  // namespace

std::string Formula::to_string(const std::vector<std::string>& names) const {
  std::string out;
  print_rec(*this, names, kOr, out);
  return out;
}

FormulaPtr to_nnf(const FormulaPtr& f) {
  check_child(f);
  switch (f->op()) {
    case Op::True:
    case Op::Pred:
      return f;
    case Op::And:
    case Op::Or: {
      std::vector<FormulaPtr> cs;
      cs.reserve(f->children().size());
      for (const auto& c : f->children()) cs.push_back(to_nnf(c));
      return f->op() == Op::And ? Formula::make_and(std::move(cs))
                                : Formula::make_or(std::move(cs));
    }
    case Op::Until:
      return Formula::make_until(to_nnf(f->child(0)), to_nnf(f->child(1)), f->lo(), f->hi());
    case Op::Eventually:
      return Formula::make_eventually(to_nnf(f->child(0)), f->lo(), f->hi());
    case Op::Always:
      return Formula::make_always(to_nnf(f->child(0)), f->lo(), f->hi());
    case Op::Not:
      break;  // handled below
  }
  const FormulaPtr& g = f->child(0);
  switch (g->op()) {
    case Op::True:
      return f;  // !true is already a literal
    case Op::Pred:
      return Formula::make_pred(g->pred().negated());
    case Op::Not:
      return to_nnf(g->child(0));
    case Op::And:
    case Op::Or: {
      std::vector<FormulaPtr> cs;
      cs.reserve(g->children().size());
      for (const auto& c : g->children()) cs.push_back(to_nnf(Formula::make_not(c)));
      return g->op() == Op::And ? Formula::make_or(std::move(cs))
                                : Formula::make_and(std::move(cs));
    }
    case Op::Eventually:
      return Formula::make_always(to_nnf(Formula::make_not(g->child(0))), g->lo(), g->hi());
    case Op::Always:
      return Formula::make_eventually(to_nnf(Formula::make_not(g->child(0))), g->lo(), g->hi());
    case Op::Until:
      // No dual operator in the AST; keep the negation in front but
      // normalise underneath it.
      return Formula::make_not(
          Formula::make_until(to_nnf(g->child(0)), to_nnf(g->child(1)), g->lo(), g->hi()));
  }
  throw InternalError("unreachable formula op in to_nnf");
}

int formula_dimension(const Formula& f) {
  int dim = 0;
  if (f.op() == Op::Pred) return static_cast<int>(f.pred().coeffs.size());
  for (const auto& c : f.children()) {
    int d = formula_dimension(*c);
    if (d == 0) continue;
    if (dim == 0) {
      dim = d;
    } else if (dim != d) {
      throw InputError("predicates disagree on state dimension (" + std::to_string(dim) +
                       " vs " + std::to_string(d) + ")");
    }
  }
  return dim;
}

}  // namespace stlgame::stl
