#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "stlgame/errors.hpp"

namespace stlgame::milp {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct VarId {
  int index = -1;
  bool valid() const { return index >= 0; }
  friend bool operator==(VarId a, VarId b) { return a.index == b.index; }
  friend bool operator<(VarId a, VarId b) { return a.index < b.index; }
};

enum class VarKind { Continuous, Binary };
enum class Sense { Le, Ge, Eq };
enum class ObjSense { Minimize, Maximize };

struct Variable {
  VarKind kind = VarKind::Continuous;
  double lower = -kInfinity;
  double upper = kInfinity;
  std::string name;
};

struct LinTerm {
  VarId var;
  double coeff = 0.0;
};

/// Linear expression sum(coeff_i * var_i) + constant. Duplicate variables
/// are merged by summing their coefficients.
class LinExpr {
 public:
  LinExpr() = default;
  /*implicit*/ LinExpr(double c) : constant_(c) {}
  /*implicit*/ LinExpr(VarId v) { add(v, 1.0); }

  LinExpr& add(VarId v, double coeff);
  LinExpr& operator+=(const LinExpr& other);
  LinExpr& operator-=(const LinExpr& other);
  LinExpr& operator*=(double s);

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double s, LinExpr e) { return e *= s; }
  friend LinExpr operator*(LinExpr e, double s) { return e *= s; }
  friend LinExpr operator-(LinExpr e) { return e *= -1.0; }

  const std::vector<LinTerm>& terms() const { return terms_; }
  double constant() const { return constant_; }
  void set_constant(double c) { constant_ = c; }
  bool is_constant() const { return terms_.empty(); }

 private:
  std::vector<LinTerm> terms_;  // sorted by variable index, no duplicates
  double constant_ = 0.0;
};

inline LinExpr operator*(double s, VarId v) { return LinExpr(v) *= s; }
inline LinExpr operator*(VarId v, double s) { return LinExpr(v) *= s; }

struct LinConstraint {
  std::vector<LinTerm> terms;  // sorted by variable index, no duplicates
  Sense sense = Sense::Le;
  double rhs = 0.0;
  std::string name;
};

/// Mixed-integer linear model. Build single-threaded, then treat as frozen;
/// the solvers never mutate it.
class MilpModel {
 public:
  VarId add_variable(VarKind kind, double lower, double upper, const std::string& name);
  VarId add_continuous(double lower, double upper, const std::string& name) {
    return add_variable(VarKind::Continuous, lower, upper, name);
  }
  VarId add_binary(const std::string& name) {
    return add_variable(VarKind::Binary, 0.0, 1.0, name);
  }

  /// expr (sense) rhs. The expression's constant moves to the right side.
  void add_constraint(const LinExpr& expr, Sense sense, double rhs, std::string name = "");
  void set_objective(ObjSense sense, const LinExpr& objective);

  /// Replaces a variable's bounds, e.g. to fix an input sequence or warm
  /// candidate. Binary variables may only be tightened within [0, 1].
  void set_variable_bounds(VarId id, double lower, double upper);

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(cons_.size()); }
  const Variable& variable(VarId id) const;
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<LinConstraint>& constraints() const { return cons_; }
  ObjSense objective_sense() const { return obj_sense_; }
  /// Objective coefficient per variable index (dense) plus constant offset.
  const std::vector<double>& objective_coeffs() const { return obj_coeffs_; }
  double objective_offset() const { return obj_offset_; }

  /// Lookup by unique name; returns an invalid VarId when absent.
  VarId find_variable(const std::string& name) const;

 private:
  std::vector<Variable> vars_;
  std::vector<LinConstraint> cons_;
  std::vector<double> obj_coeffs_;
  double obj_offset_ = 0.0;
  ObjSense obj_sense_ = ObjSense::Minimize;
  std::unordered_map<std::string, int> name_index_;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, TimeLimit };

const char* to_string(SolveStatus s);

struct SolveStats {
  long long simplex_iterations = 0;
  long long nodes = 0;
  double wall_seconds = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::Infeasible;
  /// Best known assignment (empty when none). For Optimal this satisfies
  /// all constraints within the feasibility tolerance.
  Eigen::VectorXd assignment;
  double objective = std::numeric_limits<double>::quiet_NaN();
  /// Proven bound on the optimum (<= objective when minimizing).
  double best_bound = std::numeric_limits<double>::quiet_NaN();
  SolveStats stats;

  bool has_solution() const { return assignment.size() > 0; }
  double value(VarId id) const;
};

/// Optional primal heuristic invoked by branch-and-bound with the current
/// LP relaxation. It may propose values for the binary variables (partial
/// proposals allowed); the solver fixes them, re-solves the LP and accepts
/// the completion if it is feasible and improves the incumbent.
using CompletionHeuristic =
    std::function<std::vector<std::pair<VarId, double>>(const Eigen::VectorXd& relaxation)>;

struct SolveOptions {
  double feasibility_tol = 1e-7;
  double integrality_tol = 1e-6;
  double mip_gap_abs = 1e-6;
  double mip_gap_rel = 1e-6;
  long long node_limit = -1;        // < 0: unlimited
  long long iteration_limit = -1;   // total simplex iterations, < 0: unlimited
  double time_limit_seconds = -1;   // < 0: unlimited
  CompletionHeuristic heuristic;    // optional
};

/// Solve the continuous relaxation (binaries relaxed to [lower, upper]).
SolveResult solve_lp(const MilpModel& model, const SolveOptions& options = {});

/// Branch-and-bound on the binaries: best-bound node selection,
/// most-fractional branching, deterministic index tie-breaks. Fully
/// sequential and deterministic: identical model + options give identical
/// results.
SolveResult solve_milp(const MilpModel& model, const SolveOptions& options = {});

/// Pluggable solver backends. The embedded branch-and-bound is always
/// registered under the name "embedded" and is the default.
class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual std::string name() const = 0;
  virtual SolveResult solve(const MilpModel& model, const SolveOptions& options) = 0;
};

void register_backend(std::shared_ptr<SolverBackend> backend);
std::vector<std::string> backend_names();
SolveResult backend_solve(const MilpModel& model, const std::string& backend,
                          const SolveOptions& options = {});

/// Backend that writes the model to an LP file before delegating to the
/// embedded solver; useful for cross-checking with external tools.
class LpExportBackend : public SolverBackend {
 public:
  explicit LpExportBackend(std::string path) : path_(std::move(path)) {}
  std::string name() const override { return "lp-export"; }
  SolveResult solve(const MilpModel& model, const SolveOptions& options) override;

 private:
  std::string path_;
};

/// CPLEX-style LP text format (objective, constraints, bounds, binaries).
void write_lp(std::ostream& out, const MilpModel& model);
MilpModel parse_lp(std::istream& in);

}  // namespace stlgame::milp
