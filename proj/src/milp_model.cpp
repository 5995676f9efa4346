#include "stlgame/milp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace stlgame::milp {

namespace {

// Merge a term list in place: sort by variable index, sum duplicates, drop
// exact zeros that result from cancellation.
void normalize_terms(std::vector<LinTerm>& terms) {
  std::sort(terms.begin(), terms.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms.size();) {
    VarId v = terms[i].var;
    double sum = 0.0;
    while (i < terms.size() && terms[i].var == v) sum += terms[i++].coeff;
    if (sum != 0.0) terms[out++] = LinTerm{v, sum};
  }
  terms.resize(out);
}

void check_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw InputError(std::string(what) + " must be finite");
}

}  // namespace

LinExpr& LinExpr::add(VarId v, double coeff) {
  if (!v.valid()) throw InputError("linear expression references an invalid variable");
  check_finite(coeff, "coefficient");
  if (coeff == 0.0) return *this;
  terms_.push_back(LinTerm{v, coeff});
  normalize_terms(terms_);
  return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& other) {
  constant_ += other.constant_;
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  normalize_terms(terms_);
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& other) {
  constant_ -= other.constant_;
  for (const LinTerm& t : other.terms_) terms_.push_back(LinTerm{t.var, -t.coeff});
  normalize_terms(terms_);
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  check_finite(s, "scale factor");
  constant_ *= s;
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (LinTerm& t : terms_) t.coeff *= s;
  return *this;
}

VarId MilpModel::add_variable(VarKind kind, double lower, double upper,
                              const std::string& name) {
  if (name.empty()) throw InputError("variable name must not be empty");
  if (std::isnan(lower) || std::isnan(upper)) {
    throw InputError("variable '" + name + "' has NaN bounds");
  }
  if (lower > upper) {
    throw InputError("variable '" + name + "' has lower bound above upper bound");
  }
  if (kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
    throw InputError("binary variable '" + name + "' must have bounds within [0, 1]");
  }
  if (find_variable(name).valid()) {
    throw InputError("duplicate variable name '" + name + "'");
  }
  VarId id{static_cast<int>(vars_.size())};
  vars_.push_back(Variable{kind, lower, upper, name});
  obj_coeffs_.push_back(0.0);
  name_index_.emplace(name, id.index);
  return id;
}

void MilpModel::add_constraint(const LinExpr& expr, Sense sense, double rhs,
                               std::string name) {
  check_finite(rhs, "constraint right-hand side");
  LinConstraint c;
  c.terms = expr.terms();
  c.sense = sense;
  c.rhs = rhs - expr.constant();
  c.name = std::move(name);
  for (const LinTerm& t : c.terms) {
    if (!t.var.valid() || t.var.index >= num_variables()) {
      throw InputError("constraint references an unknown variable");
    }
    check_finite(t.coeff, "constraint coefficient");
  }
  cons_.push_back(std::move(c));
}

void MilpModel::set_objective(ObjSense sense, const LinExpr& objective) {
  obj_sense_ = sense;
  std::fill(obj_coeffs_.begin(), obj_coeffs_.end(), 0.0);
  for (const LinTerm& t : objective.terms()) {
    if (!t.var.valid() || t.var.index >= num_variables()) {
      throw InputError("objective references an unknown variable");
    }
    check_finite(t.coeff, "objective coefficient");
    obj_coeffs_[static_cast<std::size_t>(t.var.index)] = t.coeff;
  }
  obj_offset_ = objective.constant();
}

void MilpModel::set_variable_bounds(VarId id, double lower, double upper) {
  if (!id.valid() || id.index >= num_variables()) {
    throw InternalError("variable id out of range");
  }
  Variable& v = vars_[static_cast<std::size_t>(id.index)];
  if (std::isnan(lower) || std::isnan(upper)) {
    throw InputError("variable '" + v.name + "' has NaN bounds");
  }
  if (lower > upper) {
    throw InputError("variable '" + v.name + "' has lower bound above upper bound");
  }
  if (v.kind == VarKind::Binary && (lower < 0.0 || upper > 1.0)) {
    throw InputError("binary variable '" + v.name + "' must have bounds within [0, 1]");
  }
  v.lower = lower;
  v.upper = upper;
}

const Variable& MilpModel::variable(VarId id) const {
  if (!id.valid() || id.index >= num_variables()) {
    throw InternalError("variable id out of range");
  }
  return vars_[static_cast<std::size_t>(id.index)];
}

VarId MilpModel::find_variable(const std::string& name) const {
  auto it = name_index_.find(name);
  if (it == name_index_.end()) return VarId{};
  return VarId{it->second};
}

double SolveResult::value(VarId id) const {
  if (!id.valid() || id.index >= assignment.size()) {
    throw InternalError("no value for the requested variable");
  }
  return assignment[id.index];
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterLimit: return "iteration_limit";
    case SolveStatus::TimeLimit: return "time_limit";
  }
  return "unknown";
}

namespace {

class EmbeddedBackend : public SolverBackend {
 public:
  std::string name() const override { return "embedded"; }
  SolveResult solve(const MilpModel& model, const SolveOptions& options) override {
    return solve_milp(model, options);
  }
};

std::map<std::string, std::shared_ptr<SolverBackend>>& registry() {
  static std::map<std::string, std::shared_ptr<SolverBackend>> backends = [] {
    std::map<std::string, std::shared_ptr<SolverBackend>> m;
    auto embedded = std::make_shared<EmbeddedBackend>();
    m.emplace(embedded->name(), embedded);
    return m;
  }();
  return backends;
}

}  // namespace

void register_backend(std::shared_ptr<SolverBackend> backend) {
  if (!backend) throw InternalError("cannot register a null solver backend");
  registry()[backend->name()] = std::move(backend);
}

std::vector<std::string> backend_names() {
  std::vector<std::string> names;
  for (const auto& [name, backend] : registry()) names.push_back(name);
  return names;
}

SolveResult backend_solve(const MilpModel& model, const std::string& backend,
                          const SolveOptions& options) {
  auto it = registry().find(backend);
  if (it == registry().end()) {
    throw InputError("unknown solver backend '" + backend + "'");
  }
  return it->second->solve(model, options);
}

SolveResult LpExportBackend::solve(const MilpModel& model, const SolveOptions& options) {
  std::ofstream out(path_);
  if (!out) throw InputError("cannot open '" + path_ + "' for LP export");
  write_lp(out, model);
  if (!out.good()) throw InputError("failed writing LP file '" + path_ + "'");
  return solve_milp(model, options);
}

}  // namespace stlgame::milp
