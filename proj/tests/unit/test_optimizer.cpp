#include "doctest.h"

#include <cmath>

#include "mcaoi/errors.hpp"
#include "mcaoi/optimizer.hpp"
#include "support/oracles.hpp"

using namespace mcaoi;

TEST_CASE("SNR threshold for R = 1.6") {
  const double t = snr_threshold(FblConfig::smart_grid_default());
  CHECK(linear_to_db(t) == doctest::Approx(oracle::kThresholdDbR16).epsilon(1e-9));
}

TEST_CASE("feasible range at the default operating point") {
  OptimizerParams p;
  const auto r = feasible_range(p);
  CHECK(r.k_max == 31);  // floor(10^1.5)
  CHECK(r.k_violation == 3);
  CHECK(r.k_min == 3);
  CHECK_FALSE(r.capped);
  CHECK_FALSE(r.admits(2));
  CHECK(r.admits(3));
  CHECK_FALSE(r.admits(32));
}

TEST_CASE("search cap bounds the power range") {
  OptimizerParams p;
  p.transmit_power_dbm = 28.0;
  const auto r = feasibility_bounds(p);
  CHECK(r.capped);
  CHECK(r.k_max == p.search_cap);
}

TEST_CASE("empty range names the binding constraint") {
  OptimizerParams p;
  p.max_total_power_dbm = p.transmit_power_dbm;
  // K = 1 also breaks (C2) at 35 dBm, so the violation constraint is named.
  CHECK(feasibility_bounds(p).binding_constraint().rfind("C2", 0) == 0);
  p.max_violation = 1.0;
  const auto r = feasibility_bounds(p);
  CHECK(r.empty());
  CHECK(r.binding_constraint().rfind("C1", 0) == 0);
  CHECK_THROWS_AS(feasible_range(p), InfeasibleError);
  const auto fb = optimize_dinkelbach(OptimizerParams{[] {
    OptimizerParams q;
    q.max_total_power_dbm = q.transmit_power_dbm + 3.1;  // K_max = 2
    q.max_violation = 1.0;
    return q;
  }()});
  CHECK(fb.method == SolveMethod::kFallback);
  CHECK(fb.k_opt == 1);
}

TEST_CASE("no admissible K throws with the violation constraint") {
  OptimizerParams p;
  p.max_violation = 1e-9;
  try {
    optimize_exhaustive(p);
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.constraint().rfind("C2", 0) == 0);
  }
}

TEST_CASE("exhaustive and Dinkelbach agree at 35 dBm") {
  OptimizerParams p;
  const auto ex = optimize_exhaustive(p);
  const auto dk = optimize_dinkelbach(p);
  CHECK(ex.k_opt == 3);
  CHECK(dk.k_opt == ex.k_opt);
  CHECK(dk.iterations <= 100);
  CHECK(ex.table.size() == 31);
  // Constrained maximizer is interior to the power range.
  CHECK(ex.k_opt > 1);
  CHECK(ex.k_opt < ex.range.k_max);
}

TEST_CASE("unconstrained maximizer is interior at 28 dBm") {
  OptimizerParams p;
  p.transmit_power_dbm = 28.0;
  p.max_violation = 1.0;
  const auto ex = optimize_exhaustive(p);
  CHECK(ex.k_opt == 3);
  CHECK(ee_paoi_ratio(3, p) > ee_paoi_ratio(2, p));
  CHECK(ee_paoi_ratio(3, p) > ee_paoi_ratio(4, p));
}

TEST_CASE("relaxed ratio matches the integer ratio") {
  OptimizerParams p;
  for (int k = 1; k <= 10; ++k) {
    CHECK(ee_paoi_ratio_relaxed(k, p) == doctest::Approx(ee_paoi_ratio(k, p)).epsilon(1e-12));
  }
}

TEST_CASE("EE-PAoI gain: exact and high-rate forms") {
  OptimizerParams p;
  p.arrival_rate = 0.01;  // lambda M = 0.005, far from the high-rate regime
  const auto g = ee_paoi_gain(2, p);
  CHECK(g.exact == doctest::Approx(ee_paoi_ratio(2, p) / ee_paoi_ratio(1, p)));
  CHECK_THROWS_AS(ee_paoi_gain(1, p), DomainError);
}

TEST_CASE("evaluate_k reports the per-K row") {
  OptimizerParams p;
  const auto r = feasibility_bounds(p);
  const auto row = evaluate_k(1, p, r);
  CHECK(row.avg_blep == doctest::Approx(oracle::kEpsPt35K1).epsilon(1e-10));
  CHECK(row.violation > p.max_violation);
  CHECK_FALSE(row.feasible);
}

TEST_CASE("parameter validation") {
  OptimizerParams p;
  p.max_violation = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = OptimizerParams{};
  p.search_cap = 0;
  CHECK_THROWS_AS(p.validate(), DomainError);
}

TEST_CASE("concavity audit reports on the relaxed numerator") {
  const auto v = concavity_audit(FblConfig::smart_grid_default(), {1.0, 10.0, 100.0});
  for (const auto& c : v) CHECK(c.second_difference > 0.0);
}
