#include "doctest.h"

#include <cmath>

#include "mcaoi/errors.hpp"
#include "mcaoi/fbl_channel.hpp"
#include "support/oracles.hpp"

using namespace mcaoi;

TEST_CASE("coding constants of the default configuration") {
  const auto cfg = FblConfig::smart_grid_default();
  CHECK(cfg.coding_rate() == doctest::Approx(1.6));
  CHECK(cfg.service_time_ms() == doctest::Approx(0.5));
  CHECK(cfg.knee_center() == doctest::Approx(oracle::kKneeCenter).epsilon(1e-5));
  CHECK(cfg.knee_slope() == doctest::Approx(oracle::kKneeSlope).epsilon(1e-5));
  CHECK(cfg.lower_knee() == doctest::Approx(oracle::kLowerKnee).epsilon(1e-5));
  CHECK(cfg.upper_knee() == doctest::Approx(oracle::kUpperKnee).epsilon(1e-5));
}

TEST_CASE("with_rate picks the blocklength from the rate") {
  CHECK(FblConfig::with_rate(1.0).blocklength() == 160);
  CHECK(FblConfig::with_rate(2.0).blocklength() == 80);
  CHECK_THROWS_AS(FblConfig::with_rate(0.0), DomainError);
  CHECK_THROWS_AS(FblConfig(0, 100, 0.005), DomainError);
}

TEST_CASE("instantaneous BLEP is piecewise linear and clamped") {
  const auto cfg = FblConfig::smart_grid_default();
  CHECK(blep_instantaneous(0.0, cfg) == 1.0);
  CHECK(blep_instantaneous(3.0, cfg) == 1.0);
  CHECK(blep_instantaneous(cfg.knee_center(), cfg) == doctest::Approx(0.5));
  CHECK(blep_instantaneous(5.0, cfg) == 0.0);
  double prev = 1.0;
  for (double g = 0.0; g < 6.0; g += 0.01) {
    const double e = blep_instantaneous(g, cfg);
    CHECK(e <= prev + 1e-15);
    CHECK(e >= 0.0);
    prev = e;
  }
  CHECK_THROWS_AS(blep_instantaneous(-1.0, cfg), DomainError);
}

TEST_CASE("integer-order incomplete gamma") {
  CHECK(upper_incomplete_gamma_int(4, 3.0) == doctest::Approx(oracle::kUpperGamma4At3).epsilon(1e-13));
  CHECK(upper_incomplete_gamma_int(1, 7.0) == doctest::Approx(oracle::kExpMinus7).epsilon(1e-13));
  CHECK(regularized_upper_gamma_int(5, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(regularized_upper_gamma_int(0, 1.0), DomainError);
  CHECK_THROWS_AS(regularized_upper_gamma_int(2, -1.0), DomainError);
}

TEST_CASE("Erlang density integrates to one") {
  for (int k : {1, 2, 4, 8}) {
    const double gbar = 3.0;
    const double mass = oracle::simpson([&](double g) { return erlang_pdf(g, k, gbar); }, 0.0,
                                        200.0, 20000);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(erlang_pdf(1.0, 0, 1.0), DomainError);
  CHECK_THROWS_AS(erlang_pdf(1.0, 1, 0.0), DomainError);
}

TEST_CASE("closed-form average BLEP matches frozen oracles") {
  const auto cfg = FblConfig::smart_grid_default();
  CHECK(avg_blep_mrc(LinkBudget::from_mean_snr(7.906, 1), cfg) ==
        doctest::Approx(oracle::kEps1At7906).epsilon(1e-10));
  CHECK(avg_blep_mrc(LinkBudget::from_mean_snr(7.906, 2), cfg) ==
        doctest::Approx(oracle::kEps2At7906).epsilon(1e-10));
  CHECK(avg_blep_mrc(LinkBudget::from_mean_snr(std::pow(10.0, 1.2), 4), cfg) ==
        doctest::Approx(oracle::kEps4At12dB).epsilon(1e-8));
  CHECK(avg_blep_mrc(LinkBudget(32, 23, 1), cfg) == doctest::Approx(oracle::kEpsPt32K1).epsilon(1e-10));
  CHECK(avg_blep_mrc(LinkBudget(32, 23, 4), cfg) == doctest::Approx(oracle::kEpsPt32K4).epsilon(1e-9));
  CHECK(avg_blep_mrc(LinkBudget(35, 23, 1), cfg) == doctest::Approx(oracle::kEpsPt35K1).epsilon(1e-10));
}

TEST_CASE("single-link form equals the K = 1 combined form") {
  const auto cfg = FblConfig::smart_grid_default();
  for (double gbar = 0.1; gbar < 200.0; gbar *= 1.37) {
    const auto b = LinkBudget::from_mean_snr(gbar, 1);
    CHECK(avg_blep_single(b, cfg) == doctest::Approx(avg_blep_mrc(b, cfg)).epsilon(1e-12));
  }
}

TEST_CASE("closed form agrees with an independent Simpson integration") {
  const auto cfg = FblConfig::smart_grid_default();
  for (int k = 1; k <= 8; ++k) {
    for (double gbar : {0.1, 0.5, 2.0, 7.906, 30.0, 100.0}) {
      const double ref = oracle::average_blep_simpson(k, gbar, cfg.lower_knee(), cfg.upper_knee(),
                                                      cfg.knee_center(), cfg.knee_slope());
      CHECK(avg_blep_mrc(LinkBudget::from_mean_snr(gbar, k), cfg) ==
            doctest::Approx(ref).epsilon(1e-8));
    }
  }
}

TEST_CASE("Gauss-Kronrod quadrature meets its error budget") {
  const auto cfg = FblConfig::smart_grid_default();
  for (int k : {1, 3, 8}) {
    for (double gbar : {0.1, 1.0, 10.0, 100.0}) {
      const auto b = LinkBudget::from_mean_snr(gbar, k);
      const auto est = avg_blep_quadrature_estimate(b, cfg);
      CHECK(est.abs_error <= 1e-8);
      CHECK(est.value == doctest::Approx(avg_blep_mrc(b, cfg)).epsilon(1e-9));
    }
  }
}

TEST_CASE("average BLEP decreases with K and with mean SNR") {
  // The closed form subtracts from 1, so values near 1e-14 carry rounding noise.
  constexpr double kFloor = 1e-13;
  const auto cfg = FblConfig::smart_grid_default();
  for (double gbar : {1.0, 5.0, 15.0}) {
    double prev = 1.0;
    for (int k = 1; k <= 16; ++k) {
      const double e = avg_blep_mrc(LinkBudget::from_mean_snr(gbar, k), cfg);
      CHECK(e <= prev + kFloor);
      prev = e;
    }
  }
  double prev = 1.0;
  for (double pt = 20.0; pt <= 45.0; pt += 0.5) {
    const double e = avg_blep_mrc(LinkBudget(pt, 23.0, 2), cfg);
    CHECK(e <= prev + 1e-15);
    prev = e;
  }
}

TEST_CASE("relaxed BLEP matches the integer form at integer K") {
  const auto cfg = FblConfig::smart_grid_default();
  for (int k = 1; k <= 12; ++k) {
    for (double gbar : {2.0, 8.0, 20.0}) {
      CHECK(avg_blep_mrc_relaxed(k, gbar, cfg) ==
            doctest::Approx(avg_blep_mrc(LinkBudget::from_mean_snr(gbar, k), cfg)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(avg_blep_mrc_relaxed(0.5, 1.0, cfg), DomainError);
}

TEST_CASE("link budget arithmetic") {
  const LinkBudget b(35.0, 23.0, 4);
  CHECK(b.mean_branch_snr() == doctest::Approx(std::pow(10.0, 1.2)));
  CHECK(b.total_power_mw() == doctest::Approx(4.0 * dbm_to_linear(35.0)));
  CHECK(b.with_connections(2).connections() == 2);
  CHECK_THROWS_AS(LinkBudget(35.0, 23.0, 0), DomainError);
  CHECK_THROWS_AS(LinkBudget::from_mean_snr(-1.0, 1), DomainError);
  CHECK(linear_to_db(100.0) == doctest::Approx(20.0));
  CHECK_THROWS_AS(linear_to_db(0.0), DomainError);
}
