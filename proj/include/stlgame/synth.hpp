#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "stlgame/dynamics.hpp"
#include "stlgame/encode.hpp"
#include "stlgame/milp.hpp"

namespace stlgame::synth {

/// Which of the two solution regimes an outcome belongs to: Cooperative
/// leaves the follower able to meet its own specification and bounds the
/// leader's cost over every successful response; Antagonistic blocks the
/// follower's specification outright and plans against its fallback input.
enum class Mode { Cooperative, Antagonistic };

enum class SynthStatus { Success, Infeasible, IterationLimit };

const char* to_string(Mode m);
const char* to_string(SynthStatus s);

/// Where a candidate follower sequence came from.
enum class Provenance { RandomInit, Counterexample };

/// The follower input sequences the masters constrain against. Grows by
/// one falsifier counterexample per refinement iteration.
class CandidateSet {
 public:
  CandidateSet(const dyn::BoundsBox& follower_box, int N);

  /// Validates shape and bounds (InputError on violation) and rejects
  /// near-duplicates: returns false when the sequence is within L-infinity
  /// distance 1e-9 of an existing candidate, which callers treat as a
  /// stalled refinement loop.
  bool add(std::vector<Eigen::VectorXd> u, Provenance origin);

  int size() const { return static_cast<int>(items_.size()); }
  const std::vector<Eigen::VectorXd>& sequence(int i) const;
  Provenance origin(int i) const;

 private:
  struct Item {
    std::vector<Eigen::VectorXd> u;
    Provenance origin;
  };
  dyn::BoundsBox box_;
  int N_;
  std::vector<Item> items_;
};

/// Knobs for the refinement loop and its solver calls. The grid fields
/// exist for oracle-level testing: positive values restrict the leader's
/// decision variables to an evenly spaced grid inside the input box and
/// replace the follower-side falsifier with exhaustive enumeration of the
/// same grid, making synthesis comparable against brute force.
struct SynthConfig {
  std::uint64_t seed = 0;
  int init_candidates = 5;
  int max_iters = 50;
  /// Exit slack for the falsifier checks (epsilon_cegis).
  double cegis_tol = 1e-6;
  /// Shared by every encoding context this run creates (prefixes are set
  /// per context internally).
  enc::EncodeOptions encode;
  milp::SolveOptions solver;
  /// Solver backend name ("embedded" runs the built-in branch-and-bound).
  std::string backend = "embedded";
  /// Seed branch-and-bound with simulation-guided completions.
  bool use_heuristic = true;
  int leader_grid_levels = 0;
  int follower_grid_levels = 0;
  /// Random follower sequences drawn by the certification sampler.
  int verify_samples = 10000;
};

/// Independent re-check of a finished outcome: re-simulation + monitors,
/// a fresh falsifier solve, and a randomized box sampler, all away from
/// the master's own encodings.
struct Certificate {
  bool passed = false;
  /// Fresh falsifier optimum (min-implication value in cooperative mode,
  /// max follower robustness in antagonistic mode).
  double falsifier_value = 0.0;
  int samples_checked = 0;
  /// Samples discarded because their trajectory left the state box.
  int samples_skipped = 0;
  std::string detail;
  /// The violating follower sequence when a check failed, empty otherwise.
  std::vector<Eigen::VectorXd> witness;
};

struct IterationRecord {
  int candidates = 0;
  double master_objective = 0.0;
  double falsifier_value = 0.0;
  bool counterexample = false;
};

struct SynthesisOutcome {
  Mode mode = Mode::Cooperative;
  SynthStatus status = SynthStatus::Infeasible;
  std::vector<Eigen::VectorXd> u_L;
  /// Cooperative: bound on the leader's cost over every successful
  /// follower response, measured with the piecewise-linear effort the
  /// MILPs use. Antagonistic: equal to exact_cost, the realized cost of
  /// the fallback play.
  double k = 0.0;
  /// Exact-norm cost of the decided play: the worst eval_cost over the
  /// known successful responses (cooperative) or the cost of the
  /// fallback-input trajectory (antagonistic).
  double exact_cost = 0.0;
  /// Cooperative: a successful follower response witnessing SR != empty.
  std::vector<Eigen::VectorXd> witness_response;
  std::vector<IterationRecord> iterations;
  Certificate certificate;
  /// Human-readable reason for a non-Success status.
  std::string diagnostic;
};

/// Membership verdicts for one follower sequence against a fixed leader
/// plan. best_response follows the fallback rule: when no successful
/// response exists, the only best response is the scenario's
/// noninterfering sequence.
struct ResponseQuery {
  bool successful = false;
  bool sr_nonempty = false;
  bool best_response = false;
};

/// Does u_F satisfy the follower specification under this leader plan?
/// Simulates and monitors; throws InputError on out-of-bounds inputs.
bool is_successful_response(const dyn::Scenario& sc,
                            const std::vector<Eigen::VectorXd>& u_L,
                            const std::vector<Eigen::VectorXd>& u_F);

struct SrWitness {
  bool nonempty = false;
  std::vector<Eigen::VectorXd> witness;  // a successful response when nonempty
};

/// Is SR(u_L, phi_F) nonempty? Solves a feasibility MILP over the follower
/// variables only (the fixed leader folds into the dynamics rows) and
/// returns a monitor-checked witness on success. The check asserts the
/// specification with the encoding margin, so satisfaction achievable only
/// inside the margin band reports false. Throws ConfigError when the
/// solver gives up on a limit.
SrWitness sr_nonempty(const dyn::Scenario& sc,
                      const std::vector<Eigen::VectorXd>& u_L,
                      const SynthConfig& cfg = {});

/// Combined classification of one response (see ResponseQuery).
ResponseQuery query_response(const dyn::Scenario& sc,
                             const std::vector<Eigen::VectorXd>& u_L,
                             const std::vector<Eigen::VectorXd>& u_F,
                             const SynthConfig& cfg = {});

/// Refinement synthesis for the cooperative regime: the master picks the
/// leader plan, one existential follower response asserted successful, and
/// a cost bound k valid against every candidate; the falsifier then
/// searches the whole follower box for a response that either beats k or
/// breaks the implication "follower succeeds => leader succeeds", feeding
/// violations back as candidates. Success carries a passed certificate.
SynthesisOutcome cooperative_synthesize(const dyn::Scenario& sc,
                                        const SynthConfig& cfg = {});

/// Refinement synthesis for the antagonistic regime: the master minimizes
/// the leader's cost under the follower's fallback input subject to the
/// leader specification and to blocking every candidate response; the
/// falsifier maximizes the follower's robustness and must end strictly
/// negative.
SynthesisOutcome antagonistic_synthesize(const dyn::Scenario& sc,
                                         const SynthConfig& cfg = {});

/// Runs both regimes and returns the outcome with the lower verified
/// exact cost; ties go to the cooperative side. Infeasible only when both
/// regimes are.
SynthesisOutcome solve_ssp(const dyn::Scenario& sc, const SynthConfig& cfg = {});

/// Re-derives a Success outcome's guarantees from scratch: (a) simulate +
/// monitor the decided play, (b) a fresh falsifier solve, (c) randomized
/// sampling of the follower box plus its corner inputs held constant.
/// Throws InputError when the outcome is not Success.
Certificate verify_outcome(const dyn::Scenario& sc, const SynthesisOutcome& outcome,
                           const SynthConfig& cfg = {});

/// Exhaustive grid baseline for desk-sized instances: enumerates leader
/// and follower input grids, classifies responses per the definitions, and
/// returns the grid-optimal leader plan with its worst-case cost over best
/// responses. Guards against combinatorial blowup with an InputError.
struct BruteForceResult {
  bool feasible = false;
  Mode mode = Mode::Cooperative;  // regime the optimal grid plan lands in
  std::vector<Eigen::VectorXd> u_L;
  double cost = 0.0;
};

BruteForceResult brute_force_ssp(const dyn::Scenario& sc, int leader_levels,
                                 int follower_levels);

/// Worst-case gap between the exact squared effort and its tangent-line
/// relaxation over the leader box, used when certifying cost bounds
/// (zero for the L1 norm).
double pwl_gap_bound(const dyn::Scenario& sc);

}  // namespace stlgame::synth
