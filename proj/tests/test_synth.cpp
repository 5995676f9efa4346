#include "stlgame/synth.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "stlgame/dynamics.hpp"
#include "stlgame/monitor.hpp"
#include "stlgame/parser.hpp"

using namespace stlgame;
using namespace stlgame::synth;
using stl::Formula;

namespace {

// Decoupled integrators: the leader drives x, the follower drives y, and
// neither can touch the other's coordinate. Worst cases and optima are
// then computable by hand, one axis at a time.
dyn::Scenario decoupled(int N) {
  dyn::Scenario sc;
  sc.state_names = {"x", "y"};
  sc.system.A = Eigen::MatrixXd::Identity(2, 2);
  sc.system.B_L = Eigen::MatrixXd::Zero(2, 1);
  sc.system.B_L(0, 0) = 1.0;
  sc.system.B_F = Eigen::MatrixXd::Zero(2, 1);
  sc.system.B_F(1, 0) = 1.0;
  sc.system.c = Eigen::VectorXd::Zero(2);
  sc.x0 = Eigen::VectorXd::Zero(2);
  sc.N = N;
  sc.state_bounds = {Eigen::VectorXd::Constant(2, -8.0),
                     Eigen::VectorXd::Constant(2, 8.0)};
  sc.leader_bounds = {Eigen::VectorXd::Constant(1, -1.0),
                      Eigen::VectorXd::Constant(1, 1.0)};
  sc.follower_bounds = {Eigen::VectorXd::Constant(1, -1.0),
                        Eigen::VectorXd::Constant(1, 1.0)};
  sc.phi_L = Formula::make_true();
  sc.phi_F = Formula::make_true();
  sc.cost.norm = dyn::EffortNorm::L1;
  sc.cost.effort_weight = 0.0;
  return sc;
}

// Coupled variant: the leader's input also drags y down one-for-one, so a
// determined leader can price the follower's task out of reach.
dyn::Scenario coupled(int N) {
  dyn::Scenario sc = decoupled(N);
  sc.system.B_L(1, 0) = -1.0;
  return sc;
}

void set_specs(dyn::Scenario& sc, const std::string& phi_l, const std::string& phi_f) {
  sc.phi_L = stl::parse_formula(phi_l, sc.state_names);
  sc.phi_F = stl::parse_formula(phi_f, sc.state_names);
  sc.validate();
}

// Test-sized solver budget: few certification samples, everything else at
// the defaults.
SynthConfig quick_config(std::uint64_t seed = 7) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.verify_samples = 300;
  return cfg;
}

std::vector<Eigen::VectorXd> constant_sequence(int N, double v) {
  return std::vector<Eigen::VectorXd>(static_cast<std::size_t>(N),
                                      Eigen::VectorXd::Constant(1, v));
}

}  // namespace

TEST_CASE("candidate sets validate shape and bounds and deduplicate") {
  dyn::BoundsBox box{Eigen::VectorXd::Constant(1, -1.0), Eigen::VectorXd::Constant(1, 1.0)};
  CandidateSet cands(box, 3);
  CHECK(cands.size() == 0);

  CHECK(cands.add(constant_sequence(3, 0.5), Provenance::RandomInit));
  CHECK(cands.size() == 1);
  CHECK(cands.origin(0) == Provenance::RandomInit);
  CHECK(cands.sequence(0)[1][0] == doctest::Approx(0.5));

  // Exact duplicates and near-duplicates are rejected without error.
  CHECK_FALSE(cands.add(constant_sequence(3, 0.5), Provenance::Counterexample));
  CHECK_FALSE(cands.add(constant_sequence(3, 0.5 + 1e-12), Provenance::Counterexample));
  CHECK(cands.size() == 1);
  CHECK(cands.add(constant_sequence(3, -0.5), Provenance::Counterexample));
  CHECK(cands.origin(1) == Provenance::Counterexample);

  CHECK_THROWS_AS(cands.add(constant_sequence(2, 0.0), Provenance::RandomInit), InputError);
  CHECK_THROWS_AS(cands.add(constant_sequence(3, 1.5), Provenance::RandomInit), InputError);
}

TEST_CASE("successful responses demand the follower task and the state box") {
  dyn::Scenario sc = decoupled(3);
  set_specs(sc, "true", "F[1,3](y >= 0.375)");

  auto zero = constant_sequence(3, 0.0);
  CHECK_FALSE(is_successful_response(sc, zero, zero));
  CHECK(is_successful_response(sc, zero, constant_sequence(3, 0.5)));

  // The same winning input stops counting once it leaves the state box.
  dyn::Scenario tight = sc;
  tight.state_bounds.upper[1] = 1.25;
  CHECK(is_successful_response(tight, zero, constant_sequence(3, 0.4)));
  CHECK_FALSE(is_successful_response(tight, zero, constant_sequence(3, 0.5)));
}

TEST_CASE("successful-response feasibility matches hand enumeration") {
  dyn::Scenario sc = decoupled(2);
  SynthConfig cfg = quick_config();
  auto zero = constant_sequence(2, 0.0);

  // y peaks at 2 after two full-throttle steps; thresholds on either side.
  set_specs(sc, "true", "F[1,2](y >= 1.875)");
  SrWitness w = sr_nonempty(sc, zero, cfg);
  REQUIRE(w.nonempty);
  CHECK(is_successful_response(sc, zero, w.witness));

  set_specs(sc, "true", "F[1,2](y >= 2.125)");
  CHECK_FALSE(sr_nonempty(sc, zero, cfg).nonempty);
}

TEST_CASE("successful responses respect leader coupling") {
  dyn::Scenario sc = coupled(2);
  set_specs(sc, "true", "F[1,2](y >= 1.5)");
  SynthConfig cfg = quick_config();

  // Full reverse throttle lifts y's ceiling to 3; full forward caps it at 0.
  SrWitness open = sr_nonempty(sc, constant_sequence(2, -1.0), cfg);
  REQUIRE(open.nonempty);
  CHECK(is_successful_response(sc, constant_sequence(2, -1.0), open.witness));
  CHECK_FALSE(sr_nonempty(sc, constant_sequence(2, 1.0), cfg).nonempty);
}

TEST_CASE("query_response follows the best-response dichotomy") {
  dyn::Scenario sc = decoupled(3);
  set_specs(sc, "true", "F[1,3](y >= 0.375)");
  SynthConfig cfg = quick_config();
  auto zero = constant_sequence(3, 0.0);

  // SR nonempty: best responses are exactly the successful ones.
  ResponseQuery q = query_response(sc, zero, constant_sequence(3, 0.5), cfg);
  CHECK(q.successful);
  CHECK(q.sr_nonempty);
  CHECK(q.best_response);
  q = query_response(sc, zero, constant_sequence(3, -0.5), cfg);
  CHECK_FALSE(q.successful);
  CHECK(q.sr_nonempty);
  CHECK_FALSE(q.best_response);

  // SR empty: only the fallback sequence is rational.
  set_specs(sc, "true", "F[1,3](y >= 5.0)");
  q = query_response(sc, zero, zero, cfg);
  CHECK_FALSE(q.successful);
  CHECK_FALSE(q.sr_nonempty);
  CHECK(q.best_response);
  q = query_response(sc, zero, constant_sequence(3, 0.5), cfg);
  CHECK_FALSE(q.best_response);
}

TEST_CASE("cooperative synthesis on decoupled integrators hits the hand optimum") {
  // Leader: reach x >= 1.125 somewhere in [2,4]; effort is L1 at weight
  // 0.1, so each unit of throttle buys ten times its price in robustness
  // and full throttle is optimal: k = 0.1*4 - (4 - 1.125) = -2.475.
  dyn::Scenario sc = decoupled(4);
  set_specs(sc, "F[2,4](x >= 1.125)", "G[1,4](y >= 0.375)");
  sc.cost.effort_weight = 0.1;

  SynthConfig cfg = quick_config();
  SynthesisOutcome out = cooperative_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.mode == Mode::Cooperative);
  CHECK(out.k == doctest::Approx(-2.475).epsilon(1e-6));
  CHECK(out.certificate.passed);
  CHECK(out.certificate.samples_checked > 0);
  REQUIRE(static_cast<int>(out.u_L.size()) == sc.N);

  // The witness is a genuine successful response and the plan's cost
  // against it matches the certified bound (L1 carries no relaxation gap).
  REQUIRE(static_cast<int>(out.witness_response.size()) == sc.N);
  CHECK(is_successful_response(sc, out.u_L, out.witness_response));
  CHECK(out.exact_cost <= out.k + 1e-6);

  // The leader's own trajectory is full throttle.
  for (const auto& u : out.u_L) CHECK(u[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a single candidate suffices when the follower task is trivial") {
  // phi_F = true makes every response successful, and the leader-only
  // objective makes every candidate copy equally binding, so the first
  // master already lands the optimum: k = -(3 - 0.625) = -2.375.
  dyn::Scenario sc = decoupled(3);
  set_specs(sc, "F[1,3](x >= 0.625)", "true");

  SynthConfig cfg = quick_config();
  cfg.init_candidates = 1;
  SynthesisOutcome out = cooperative_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.iterations.size() == 1);
  CHECK_FALSE(out.iterations[0].counterexample);
  CHECK(out.k == doctest::Approx(-2.375).epsilon(1e-6));
  CHECK(out.certificate.passed);
}

TEST_CASE("master objectives never decrease as candidates accumulate") {
  // At effort weight 1, a unit of throttle costs exactly what its
  // robustness earns, so every plan reaching 1.125 prices at k = 1.125.
  dyn::Scenario sc = decoupled(4);
  set_specs(sc, "F[2,4](x >= 1.125)", "G[1,4](y >= 0.375)");
  sc.cost.effort_weight = 1.0;

  // No initial candidates: the first master is unconstrained and the
  // falsifier must teach it everything. Each counterexample only shrinks
  // the master's feasible set, so its optimum ratchets upward.
  SynthConfig cfg = quick_config();
  cfg.init_candidates = 0;
  SynthesisOutcome out = cooperative_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.iterations.size() >= 2);
  for (std::size_t i = 1; i < out.iterations.size(); ++i) {
    CHECK(out.iterations[i].master_objective >=
          out.iterations[i - 1].master_objective - 1e-6);
    CHECK(out.iterations[i].candidates > out.iterations[i - 1].candidates);
  }
  CHECK(out.k == doctest::Approx(1.125).epsilon(1e-6));
}

TEST_CASE("antagonistic synthesis succeeds when the follower is boxed out") {
  // The follower's box is the single point 0, so y never moves and
  // F[1,3](y >= 0.125) is hopeless: the fallback (zero) is the unique
  // best response. Leader optimum as in the cooperative toy.
  dyn::Scenario sc = decoupled(3);
  set_specs(sc, "F[1,3](x >= 0.625)", "F[1,3](y >= 0.125)");
  sc.cost.effort_weight = 0.1;
  sc.follower_bounds = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};

  SynthConfig cfg = quick_config();
  SynthesisOutcome out = antagonistic_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.mode == Mode::Antagonistic);
  CHECK(out.k == doctest::Approx(-2.075).epsilon(1e-6));
  CHECK(out.exact_cost == doctest::Approx(out.k));
  CHECK(out.certificate.passed);

  // Cooperative synthesis must refuse: no leader input opens SR.
  SynthesisOutcome coop = cooperative_synthesize(sc, cfg);
  CHECK(coop.status == SynthStatus::Infeasible);

  // solve_ssp falls through to the antagonistic plan.
  SynthesisOutcome ssp = solve_ssp(sc, cfg);
  CHECK(ssp.mode == Mode::Antagonistic);
  CHECK(ssp.status == SynthStatus::Success);
  CHECK(ssp.k == doctest::Approx(-2.075).epsilon(1e-6));
}

TEST_CASE("antagonistic synthesis is infeasible when the follower cannot be blocked") {
  // Decoupled axes: the follower reaches y >= 0.375 no matter what the
  // leader does, so every counterexample makes the next master force an
  // impossible negation.
  dyn::Scenario sc = decoupled(3);
  set_specs(sc, "F[1,3](x >= 0.625)", "F[1,3](y >= 0.375)");
  sc.cost.effort_weight = 0.1;

  SynthConfig cfg = quick_config();
  SynthesisOutcome out = antagonistic_synthesize(sc, cfg);
  CHECK(out.status == SynthStatus::Infeasible);
  CHECK_FALSE(out.diagnostic.empty());
}

TEST_CASE("solve_ssp prefers the cheaper mode when both plans certify") {
  // Coupled plant: pushing x forward drags y down. The leader can either
  // leave the follower room (cooperative, k ~= -0.625 with the follower
  // ceiling at y = 0.5) or floor it and block the follower entirely
  // (antagonistic, cost exactly -1.0). Antagonism is cheaper here.
  dyn::Scenario sc = coupled(2);
  set_specs(sc, "F[1,2](x >= 0.5)", "F[1,2](y >= 0.5)");
  sc.cost.effort_weight = 0.25;

  SynthConfig cfg = quick_config();
  SynthesisOutcome coop = cooperative_synthesize(sc, cfg);
  REQUIRE(coop.status == SynthStatus::Success);
  CHECK(coop.k == doctest::Approx(-0.625).epsilon(0.02));

  SynthesisOutcome ant = antagonistic_synthesize(sc, cfg);
  REQUIRE(ant.status == SynthStatus::Success);
  CHECK(ant.exact_cost == doctest::Approx(-1.0).epsilon(1e-6));

  SynthesisOutcome ssp = solve_ssp(sc, cfg);
  CHECK(ssp.mode == Mode::Antagonistic);
  CHECK(ssp.exact_cost == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("grid-restricted cooperative synthesis matches brute force exactly") {
  // Three levels per side on a two-step decoupled plant; offsets at .5
  // keep every reachable margin at least 0.5 from zero. Hand optimum:
  // leader (1,1) against worst successful follower trace y=(1,2) gives
  // k = 0.25*2 - min(x1-y1+3.5, x2-y2+3.5) = 0.5 - 3.5 = -3.0.
  dyn::Scenario sc = decoupled(2);
  set_specs(sc, "G[1,2](x - y >= -3.5)", "F[1,2](y >= 0.5)");
  sc.cost.effort_weight = 0.25;

  BruteForceResult brute = brute_force_ssp(sc, 3, 3);
  REQUIRE(brute.feasible);
  CHECK(brute.mode == Mode::Cooperative);
  CHECK(brute.cost == doctest::Approx(-3.0));

  SynthConfig cfg = quick_config();
  cfg.leader_grid_levels = 3;
  cfg.follower_grid_levels = 3;
  SynthesisOutcome out = cooperative_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.k == doctest::Approx(brute.cost).epsilon(1e-6));
  CHECK(out.certificate.passed);

  // The synthesized inputs sit exactly on the grid.
  for (const auto& u : out.u_L) {
    CHECK(std::abs(u[0] - std::round(u[0])) < 1e-9);
  }
}

TEST_CASE("grid-restricted antagonistic synthesis matches brute force exactly") {
  // F[1,2](y >= 2.5) is out of reach even at full throttle (y tops out at
  // 2), so every leader plan is antagonistic and the contest is pure
  // leader optimization: cost 0.25*2 - max(x_t - 1.5) = 0.5 - 0.5 = 0.
  dyn::Scenario sc = decoupled(2);
  set_specs(sc, "F[1,2](x >= 1.5)", "F[1,2](y >= 2.5)");
  sc.cost.effort_weight = 0.25;

  BruteForceResult brute = brute_force_ssp(sc, 3, 3);
  REQUIRE(brute.feasible);
  CHECK(brute.mode == Mode::Antagonistic);
  CHECK(brute.cost == doctest::Approx(0.0));

  SynthConfig cfg = quick_config();
  cfg.leader_grid_levels = 3;
  cfg.follower_grid_levels = 3;
  SynthesisOutcome out = antagonistic_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.k == doctest::Approx(brute.cost).epsilon(1e-6));
  CHECK(out.exact_cost == doctest::Approx(brute.cost).epsilon(1e-6));

  SynthesisOutcome ssp = solve_ssp(sc, cfg);
  CHECK(ssp.mode == Mode::Antagonistic);
  CHECK(ssp.exact_cost == doctest::Approx(brute.cost).epsilon(1e-6));
}

TEST_CASE("a tight leader task leaves one grid plan and both searches find it") {
  // phi_L = G[1,2](x - y >= -0.5) must hold against every successful
  // follower trace, and the worst of those is y = (1, 2): it forces
  // x_1 = 1 and x_2 = 2, the unique admissible 3-level plan. Its cost is
  // effort 0.25 * 2 minus the worst margin 0.5.
  dyn::Scenario sc = decoupled(2);
  set_specs(sc, "G[1,2](x - y >= -0.5)", "F[1,2](y >= 0.5)");
  sc.cost.effort_weight = 0.25;

  BruteForceResult brute = brute_force_ssp(sc, 3, 3);
  REQUIRE(brute.feasible);
  CHECK(brute.mode == Mode::Cooperative);
  CHECK(brute.cost == doctest::Approx(0.25 * 2 - 0.5));

  SynthConfig cfg = quick_config();
  cfg.leader_grid_levels = 3;
  cfg.follower_grid_levels = 3;
  SynthesisOutcome out = cooperative_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);
  CHECK(out.k == doctest::Approx(brute.cost).epsilon(1e-6));
}

TEST_CASE("brute force validates its grid sizes") {
  dyn::Scenario sc = decoupled(2);
  set_specs(sc, "true", "true");
  CHECK_THROWS_AS(brute_force_ssp(sc, 1, 3), ConfigError);
  CHECK_THROWS_AS(brute_force_ssp(sc, 3, 1), ConfigError);

  dyn::Scenario big = decoupled(12);
  set_specs(big, "true", "true");
  CHECK_THROWS_AS(brute_force_ssp(big, 9, 9), InputError);
}

TEST_CASE("verification certifies honest outcomes and flags corrupted ones") {
  dyn::Scenario sc = decoupled(4);
  set_specs(sc, "F[2,4](x >= 1.125)", "G[1,4](y >= 0.375)");
  sc.cost.effort_weight = 0.1;

  SynthConfig cfg = quick_config();
  SynthesisOutcome out = cooperative_synthesize(sc, cfg);
  REQUIRE(out.status == SynthStatus::Success);

  Certificate fresh = verify_outcome(sc, out, cfg);
  CHECK(fresh.passed);
  CHECK(fresh.falsifier_value >= -cfg.cegis_tol);

  // Zeroed leader inputs never reach x >= 1.125: the certificate must
  // fail and name a follower response exhibiting the violation.
  SynthesisOutcome broken = out;
  for (auto& u : broken.u_L) u.setZero();
  Certificate bad = verify_outcome(sc, broken, cfg);
  CHECK_FALSE(bad.passed);
  CHECK_FALSE(bad.detail.empty());
  REQUIRE(static_cast<int>(bad.witness.size()) == sc.N);
  // The named response is successful for the follower yet sinks phi_L.
  CHECK(is_successful_response(sc, broken.u_L, bad.witness));
  dyn::Trajectory exhibit = dyn::simulate(sc, broken.u_L, bad.witness);
  CHECK_FALSE(stl::eval_bool(*sc.phi_L, exhibit.states));

  // An understated cost bound is caught as well.
  SynthesisOutcome cheap = out;
  cheap.k -= 1.0;
  Certificate caught = verify_outcome(sc, cheap, cfg);
  CHECK_FALSE(caught.passed);

  SynthesisOutcome failed = out;
  failed.status = SynthStatus::Infeasible;
  CHECK_THROWS_AS(verify_outcome(sc, failed, cfg), InputError);
}

TEST_CASE("synthesis is deterministic for a fixed seed") {
  dyn::Scenario sc = decoupled(4);
  set_specs(sc, "F[2,4](x >= 1.125)", "G[1,4](y >= 0.375)");
  sc.cost.effort_weight = 0.1;

  SynthConfig cfg = quick_config(21);
  SynthesisOutcome a = cooperative_synthesize(sc, cfg);
  SynthesisOutcome b = cooperative_synthesize(sc, cfg);
  REQUIRE(a.status == SynthStatus::Success);
  REQUIRE(b.status == SynthStatus::Success);
  CHECK(a.k == b.k);
  CHECK(a.iterations.size() == b.iterations.size());
  REQUIRE(a.u_L.size() == b.u_L.size());
  for (std::size_t t = 0; t < a.u_L.size(); ++t) {
    CHECK(a.u_L[t][0] == b.u_L[t][0]);
  }
}

TEST_CASE("seeded batch of cooperative toys all certify") {
  dyn::Scenario sc = decoupled(3);
  set_specs(sc, "F[1,3](x >= 0.625)", "F[1,3](y >= 0.375)");
  sc.cost.effort_weight = 0.1;

  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u, 6u}) {
    SynthConfig cfg = quick_config(seed);
    cfg.verify_samples = 150;
    SynthesisOutcome out = cooperative_synthesize(sc, cfg);
    REQUIRE(out.status == SynthStatus::Success);
    CHECK(out.certificate.passed);
    CHECK(out.k == doctest::Approx(-2.075).epsilon(1e-6));
  }
}

TEST_CASE("configuration errors are rejected up front") {
  dyn::Scenario sc = decoupled(2);
  set_specs(sc, "true", "true");
  SynthConfig cfg = quick_config();
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cooperative_synthesize(sc, cfg), ConfigError);
  cfg = quick_config();
  cfg.leader_grid_levels = 1;
  CHECK_THROWS_AS(antagonistic_synthesize(sc, cfg), ConfigError);
  cfg = quick_config();
  cfg.cegis_tol = 0.0;
  CHECK_THROWS_AS(cooperative_synthesize(sc, cfg), ConfigError);
}

TEST_CASE("pwl gap bound follows the tangent spacing formula") {
  dyn::Scenario sc = decoupled(7);
  set_specs(sc, "true", "true");
  sc.cost.norm = dyn::EffortNorm::SquaredPwl;
  sc.cost.effort_weight = 0.5;
  sc.cost.pwl_segments = 4;
  // One leader input on [-1,1]: w * N * ((2/4)^2 / 4) = 0.5 * 7 * 0.0625.
  CHECK(pwl_gap_bound(sc) == doctest::Approx(0.5 * 7 * 0.0625));

  sc.cost.norm = dyn::EffortNorm::L1;
  CHECK(pwl_gap_bound(sc) == 0.0);
  sc.cost.norm = dyn::EffortNorm::SquaredPwl;
  sc.cost.effort_weight = 0.0;
  CHECK(pwl_gap_bound(sc) == 0.0);
}
