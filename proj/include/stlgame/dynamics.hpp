#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "stlgame/formula.hpp"
#include "stlgame/monitor.hpp"

namespace stlgame::dyn {

/// Discrete-time affine plant with separate leader and follower input
/// channels:  x_{t+1} = A x_t + B_L uL_t + B_F uF_t + c.
/// m_F may be zero, which degenerates to single-agent synthesis.
struct AffineSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B_L;
  Eigen::MatrixXd B_F;
  Eigen::VectorXd c;

  int n() const { return static_cast<int>(A.rows()); }
  int m_L() const { return static_cast<int>(B_L.cols()); }
  int m_F() const { return static_cast<int>(B_F.cols()); }

  /// Throws InputError on inconsistent dimensions or n, m_L < 1.
  void validate() const;
};

/// Axis-aligned box, used for the state set X and input sets U^L, U^F.
struct BoundsBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
  /// Componentwise membership with a small slack for solver round-off.
  bool contains(const Eigen::VectorXd& v, double tol = 0.0) const;
};

enum class EffortNorm { SquaredPwl, L1 };

/// Leader cost J_S = effort_weight * sum_t norm(uL_t) - [flag] * rho(phi_L).
/// SquaredPwl uses the exact squared 2-norm here; the piecewise-linear
/// under-approximation with `pwl_segments` pieces exists only inside MILPs.
struct CostSpec {
  double effort_weight = 0.0;
  EffortNorm norm = EffortNorm::SquaredPwl;
  int pwl_segments = 6;
  bool include_leader_robustness = true;

  void validate() const;
};

/// A full synthesis instance: plant, horizon, boxes, both specifications
/// and the leader objective. Immutable after load; validate() is called by
/// the loader.
struct Scenario {
  AffineSystem system;
  Eigen::VectorXd x0;
  int N = 0;
  BoundsBox state_bounds;
  BoundsBox leader_bounds;
  BoundsBox follower_bounds;
  stl::FormulaPtr phi_L;
  stl::FormulaPtr phi_F;
  CostSpec cost;
  std::vector<std::string> state_names;
  /// The follower's fallback when its task is unachievable. Empty means the
  /// zero sequence; scenario files may override it ("noninterfering_input").
  std::vector<Eigen::VectorXd> noninterfering;

  void validate() const;
  /// The fallback sequence, materialized (zero_inputs when unset).
  std::vector<Eigen::VectorXd> noninterfering_or_zero() const;
};

/// Closed-loop record: states x_0..x_N plus the input sequences that
/// produced them.
struct Trajectory {
  stl::Trace states;
  std::vector<Eigen::VectorXd> u_L;
  std::vector<Eigen::VectorXd> u_F;

  /// Recomputes the dynamics and throws InternalError if any step deviates
  /// by more than 1e-9 (infinity norm).
  void validate(const Scenario& sc) const;
};

/// Roll the dynamics forward. Inputs must have length N and stay within
/// their boxes up to a 1e-6 slack (solver round-off); violations raise
/// InputError rather than being clipped.
Trajectory simulate(const Scenario& sc, const std::vector<Eigen::VectorXd>& u_L,
                    const std::vector<Eigen::VectorXd>& u_F);

/// J_S of a trajectory, with the exact effort norm.
double eval_cost(const Scenario& sc, const Trajectory& traj);

/// Stacked-state decomposition x = nominal + Phi * vec(u_F), valid for any
/// follower input because the system is affine. `nominal` is the trajectory
/// under u_F = 0 (computed without box checks), and Phi has n*(N+1) rows and
/// m_F*N columns; vec stacks uF_0..uF_{N-1}.
struct Superposition {
  stl::Trace nominal;
  Eigen::MatrixXd Phi;
};

Superposition superposition_decompose(const Scenario& sc,
                                      const std::vector<Eigen::VectorXd>& u_L);

/// The zero follower input sequence (length N), the follower's fallback
/// response when it cannot satisfy its own specification.
std::vector<Eigen::VectorXd> zero_inputs(int m, int N);

}  // namespace stlgame::dyn
