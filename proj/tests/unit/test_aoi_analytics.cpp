#include "doctest.h"

#include <cmath>

#include "mcaoi/aoi_analytics.hpp"
#include "mcaoi/diagnostics.hpp"
#include "mcaoi/errors.hpp"
#include "support/oracles.hpp"

using namespace mcaoi;

namespace {
TrafficParams traffic(double eps, int k = 1) {
  TrafficParams tp;
  tp.avg_blep = eps;
  tp.repetitions = k;
  return tp;
}
}  // namespace

TEST_CASE("error-free multi-connectivity reduces to the blocking server") {
  const auto m = metrics_nr(traffic(0.0));
  CHECK(m.avg_paoi_ms == doctest::Approx(oracle::kPaoiErrorFree));
  CHECK(m.avg_aoi_ms == doctest::Approx(oracle::kAoiErrorFree));
  CHECK(m.scheme == Scheme::kMultiConnectivity);
}

TEST_CASE("average age grows with the BLEP and diverges at one") {
  double prev_a = 0.0, prev_p = 0.0;
  for (double e = 0.0; e < 0.95; e += 0.05) {
    const auto m = metrics_nr(traffic(e));
    CHECK(m.avg_aoi_ms > prev_a);
    CHECK(m.avg_paoi_ms > prev_p);
    prev_a = m.avg_aoi_ms;
    prev_p = m.avg_paoi_ms;
  }
  CHECK_THROWS_AS(metrics_nr(traffic(1.0)), DivergenceError);
  CHECK_THROWS_AS(metrics_arq(traffic(1.0)), DivergenceError);
  CHECK_THROWS_AS(metrics_nr(traffic(-0.1)), DomainError);
}

TEST_CASE("stability convention violation only warns") {
  WarningCapture cap;
  TrafficParams tp = traffic(0.1);
  tp.arrival_rate = 4.0;  // 1/lambda = 0.25 < M
  CHECK_NOTHROW(metrics_nr(tp));
  CHECK(cap.count() == 1);
}

TEST_CASE("K-repetition with one copy equals multi-connectivity") {
  for (double e : {0.0, 0.2, 0.6}) {
    const auto a = metrics_kr(traffic(e, 1));
    const auto b = metrics_nr(traffic(e));
    CHECK(a.avg_aoi_ms == doctest::Approx(b.avg_aoi_ms));
    CHECK(a.avg_paoi_ms == doctest::Approx(b.avg_paoi_ms));
  }
  CHECK_THROWS_AS(metrics_kr(traffic(0.1, 0)), DomainError);
}

TEST_CASE("ARQ never ages worse than single-shot transmission") {
  for (double lambda : {0.2, 0.5, 1.0, 2.0}) {
    for (double e : {0.0, 0.1, 0.4, 0.8}) {
      TrafficParams tp = traffic(e);
      tp.arrival_rate = lambda;
      CHECK(metrics_arq(tp).avg_aoi_ms <= metrics_nr(tp).avg_aoi_ms + 1e-12);
      CHECK(arq_nr_gap(tp) <= 1e-12);
    }
  }
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::kMultiConnectivity, Scheme::kArq, Scheme::kRepetition}) {
    CHECK(scheme_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(scheme_from_string("tcp"), DomainError);
}

TEST_CASE("PAoI law: shifted exponential") {
  const TrafficParams tp = traffic(0.2);
  CHECK(paoi_cdf(1.0, tp) == 0.0);
  CHECK(paoi_pdf(0.5, tp) == 0.0);
  const double integral = oracle::simpson([&](double x) { return paoi_pdf(x, tp); }, 1.0 + 1e-12, 80.0, 20000);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(paoi_cdf(5.0, tp) == doctest::Approx(1.0 - paoi_violation(5.0, tp)));
  CHECK(paoi_violation(8.0, traffic(0.0)) == doctest::Approx(oracle::kExpMinus7).epsilon(1e-12));
  CHECK(paoi_distribution_mean(traffic(0.0)) == doctest::Approx(2.0));
}

TEST_CASE("PAoI threshold at or below 2M warns and saturates") {
  WarningCapture cap;
  CHECK(paoi_violation(1.0, traffic(0.1)) == 1.0);
  CHECK(cap.count() == 1);
}

TEST_CASE("violation bounds bracket every K") {
  const auto cfg = FblConfig::smart_grid_default();
  const LinkBudget b(33.0, 23.0, 1);
  const auto bounds = violation_bounds(6.0, traffic(0.0), cfg, b);
  CHECK(bounds.lower < bounds.upper);
  for (int k = 1; k <= 8; ++k) {
    const double eps = avg_blep_mrc(b.with_connections(k), cfg);
    const double v = paoi_violation(6.0, traffic(eps));
    CHECK(v <= bounds.upper + 1e-15);
    CHECK(v >= bounds.lower - 1e-15);
  }
  const auto lim = paoi_limits_nr(traffic(0.0), cfg, b);
  CHECK(lim.infinite.avg_paoi_ms == doctest::Approx(2.0));
  CHECK(lim.single.avg_paoi_ms > lim.infinite.avg_paoi_ms);
}
