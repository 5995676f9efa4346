#include "stlgame/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "stlgame/errors.hpp"

namespace stlgame::dyn {

namespace {

// Slack applied when checking box membership of solver-produced inputs.
constexpr double kBoundsSlack = 1e-6;

void check_finite(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) throw InputError(std::string(what) + " contains a non-finite entry");
}

}  // namespace

void AffineSystem::validate() const {
  if (A.rows() < 1 || A.rows() != A.cols()) {
    throw InputError("A must be square and nonempty");
  }
  if (B_L.rows() != A.rows() || B_L.cols() < 1) {
    throw InputError("B_L must have n rows and at least one column");
  }
  if (B_F.rows() != A.rows()) {
    throw InputError("B_F must have n rows (zero columns are allowed)");
  }
  if (c.size() != A.rows()) {
    throw InputError("drift c must be an n-vector");
  }
  check_finite(A, "A");
  check_finite(B_L, "B_L");
  check_finite(B_F, "B_F");
  check_finite(c, "c");
}

void BoundsBox::validate() const {
  if (lower.size() != upper.size()) {
    throw InputError("bounds box lower/upper lengths differ");
  }
  check_finite(lower, "bounds lower");
  check_finite(upper, "bounds upper");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (lower[i] > upper[i]) {
      throw InputError("bounds box has lower > upper at component " + std::to_string(i));
    }
  }
}

bool BoundsBox::contains(const Eigen::VectorXd& v, double tol) const {
  if (v.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] < lower[i] - tol || v[i] > upper[i] + tol) return false;
  }
  return true;
}

void CostSpec::validate() const {
  if (effort_weight < 0.0 || !std::isfinite(effort_weight)) {
    throw InputError("effort_weight must be a nonnegative real");
  }
  if (norm == EffortNorm::SquaredPwl && pwl_segments < 2) {
    throw InputError("pwl_segments must be at least 2");
  }
}

void Scenario::validate() const {
  system.validate();
  state_bounds.validate();
  leader_bounds.validate();
  follower_bounds.validate();
  cost.validate();
  const int n = system.n();
  if (x0.size() != n) throw InputError("x0 must be an n-vector");
  if (static_cast<int>(state_names.size()) != n) {
    throw InputError("state_names must list one name per state component");
  }
  if (state_bounds.dim() != n) throw InputError("state_bounds must have dimension n");
  if (leader_bounds.dim() != system.m_L()) {
    throw InputError("leader_bounds must have dimension m_L");
  }
  if (follower_bounds.dim() != system.m_F()) {
    throw InputError("follower_bounds must have dimension m_F");
  }
  if (!phi_L || !phi_F) throw InputError("scenario needs both phi_L and phi_F");
  if (N < 1) throw InputError("horizon N must be at least 1");
  const int need = std::max(phi_L->horizon(), phi_F->horizon());
  if (N < need) {
    throw InputError("horizon N=" + std::to_string(N) + " is shorter than the formula horizon " +
                     std::to_string(need));
  }
  for (const auto& f : {phi_L, phi_F}) {
    int d = stl::formula_dimension(*f);
    if (d != 0 && d != n) {
      throw InputError("formula references " + std::to_string(d) +
                       " state components, system has " + std::to_string(n));
    }
  }
  if (!state_bounds.contains(x0)) throw InputError("x0 violates the state bounds");
  if (!noninterfering.empty()) {
    if (static_cast<int>(noninterfering.size()) != N) {
      throw InputError("noninterfering_input must list one input per step (N rows)");
    }
    for (const auto& u : noninterfering) {
      if (u.size() != system.m_F() || !follower_bounds.contains(u)) {
        throw InputError("noninterfering_input violates the follower bounds");
      }
    }
  }
}

std::vector<Eigen::VectorXd> Scenario::noninterfering_or_zero() const {
  if (!noninterfering.empty()) return noninterfering;
  return zero_inputs(system.m_F(), N);
}

void Trajectory::validate(const Scenario& sc) const {
  const int N = sc.N;
  if (states.length() != N + 1 || static_cast<int>(u_L.size()) != N ||
      static_cast<int>(u_F.size()) != N) {
    throw InternalError("trajectory lengths inconsistent with horizon");
  }
  for (int t = 0; t < N; ++t) {
    Eigen::VectorXd next = sc.system.A * states.states[t] + sc.system.B_L * u_L[t] +
                           sc.system.B_F * u_F[t] + sc.system.c;
    if ((next - states.states[t + 1]).lpNorm<Eigen::Infinity>() > 1e-9) {
      throw InternalError("trajectory violates the dynamics at step " + std::to_string(t));
    }
  }
}

namespace {

stl::Trace roll(const Scenario& sc, const std::vector<Eigen::VectorXd>& u_L,
                const std::vector<Eigen::VectorXd>& u_F) {
  stl::Trace tr;
  tr.states.reserve(static_cast<std::size_t>(sc.N) + 1);
  tr.states.push_back(sc.x0);
  for (int t = 0; t < sc.N; ++t) {
    tr.states.push_back(sc.system.A * tr.states.back() + sc.system.B_L * u_L[t] +
                        sc.system.B_F * u_F[t] + sc.system.c);
  }
  return tr;
}

void check_inputs(const char* who, const std::vector<Eigen::VectorXd>& u, const BoundsBox& box,
                  int N, int m) {
  if (static_cast<int>(u.size()) != N) {
    throw InputError(std::string(who) + " input sequence has length " +
                     std::to_string(u.size()) + ", expected N=" + std::to_string(N));
  }
  for (int t = 0; t < N; ++t) {
    if (u[t].size() != m) {
      throw InputError(std::string(who) + " input at t=" + std::to_string(t) +
                       " has wrong dimension");
    }
    if (!box.contains(u[t], kBoundsSlack)) {
      throw InputError(std::string(who) + " input at t=" + std::to_string(t) +
                       " violates its bounds");
    }
  }
}

}  // namespace

Trajectory simulate(const Scenario& sc, const std::vector<Eigen::VectorXd>& u_L,
                    const std::vector<Eigen::VectorXd>& u_F) {
  check_inputs("leader", u_L, sc.leader_bounds, sc.N, sc.system.m_L());
  check_inputs("follower", u_F, sc.follower_bounds, sc.N, sc.system.m_F());
  Trajectory traj;
  traj.states = roll(sc, u_L, u_F);
  traj.u_L = u_L;
  traj.u_F = u_F;
  return traj;
}

double eval_cost(const Scenario& sc, const Trajectory& traj) {
  double effort = 0.0;
  for (const auto& u : traj.u_L) {
    effort += sc.cost.norm == EffortNorm::SquaredPwl ? u.squaredNorm() : u.lpNorm<1>();
  }
  double cost = sc.cost.effort_weight * effort;
  if (sc.cost.include_leader_robustness) {
    cost -= stl::robustness(*sc.phi_L, traj.states, 0);
  }
  return cost;
}

Superposition superposition_decompose(const Scenario& sc,
                                      const std::vector<Eigen::VectorXd>& u_L) {
  check_inputs("leader", u_L, sc.leader_bounds, sc.N, sc.system.m_L());
  const int n = sc.system.n();
  const int mF = sc.system.m_F();
  const int N = sc.N;

  Superposition out;
  out.nominal = roll(sc, u_L, zero_inputs(mF, N));
  out.Phi = Eigen::MatrixXd::Zero(n * (N + 1), mF * N);
  // Column block for uF_t: state x_{t'} (t' > t) moves by A^{t'-t-1} B_F.
  for (int t = 0; t < N; ++t) {
    Eigen::MatrixXd impulse = sc.system.B_F;  // effect on x_{t+1}
    for (int tp = t + 1; tp <= N; ++tp) {
      out.Phi.block(tp * n, t * mF, n, mF) = impulse;
      if (tp < N) impulse = sc.system.A * impulse;
    }
  }
  return out;
}

std::vector<Eigen::VectorXd> zero_inputs(int m, int N) {
  return std::vector<Eigen::VectorXd>(static_cast<std::size_t>(N), Eigen::VectorXd::Zero(m));
}

}  // namespace stlgame::dyn
