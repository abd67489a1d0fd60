#include "mcaoi/fbl_channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "mcaoi/errors.hpp"

namespace mcaoi {
namespace {

double clamp_unit(double p) { return std::clamp(p, 0.0, 1.0); }

// x^k e^{-x} / Gamma(k), zero at the origin.
double scaled_power_exp(double k, double x) {
  if (x <= 0.0) return 0.0;
  return std::exp(k * std::log(x) - x - std::lgamma(k));
}

// Lower and upper knees expressed in units of the branch mean SNR. The lower
// knee is clamped at zero; below it the model is the middle segment anyway.
struct ScaledKnees {
  double lower;
  double upper;
};

ScaledKnees scaled_knees(double mean_snr, const FblConfig& cfg) {
  return {std::max(cfg.lower_knee(), 0.0) / mean_snr, cfg.upper_knee() / mean_snr};
}

void require_mean_snr(double mean_snr) {
  if (!(mean_snr > 0.0) || !std::isfinite(mean_snr)) {
    throw DomainError("mean branch SNR must be positive and finite, got " +
                      std::to_string(mean_snr));
  }
}

// 1 - [Q1 + (0.5 - w*phi + k*phi*gbar) * Sigma + phi*gbar*Xi], with Sigma
// and Xi already divided by Gamma(k).
double closed_form(double k, double mean_snr, const FblConfig& cfg, double q_lower,
                   double q_upper, ScaledKnees knees) {
  const double slope = cfg.knee_slope();
  const double sigma = q_upper - q_lower;
  const double xi = scaled_power_exp(k, knees.upper) - scaled_power_exp(k, knees.lower);
  const double linear = 0.5 - cfg.knee_center() * slope + k * slope * mean_snr;
  return 1.0 - (q_lower + linear * sigma + slope * mean_snr * xi);
}

}  // namespace

FblConfig::FblConfig(int info_bits, int blocklength, double symbol_duration_ms)
    : info_bits_(info_bits),
      blocklength_(blocklength),
      symbol_duration_ms_(symbol_duration_ms) {
  if (info_bits <= 0 || blocklength <= 0 || !(symbol_duration_ms > 0.0)) {
    throw DomainError("FblConfig needs L > 0, m > 0 and Ts > 0");
  }
  rate_ = static_cast<double>(info_bits_) / blocklength_;
  center_ = std::expm1(rate_);
  slope_ = -std::sqrt(blocklength_ / (2.0 * std::numbers::pi * std::expm1(2.0 * rate_)));
}

FblConfig FblConfig::smart_grid_default() { return FblConfig(160, 100, 0.005); }

FblConfig FblConfig::with_rate(double rate, int info_bits, double symbol_duration_ms) {
  if (!(rate > 0.0)) throw DomainError("coding rate must be positive");
  const auto m = static_cast<int>(std::lround(info_bits / rate));
  return FblConfig(info_bits, m, symbol_duration_ms);
}

LinkBudget::LinkBudget(double transmit_power_dbm, double noise_variance_dbm, int connections)
    : transmit_power_dbm_(transmit_power_dbm),
      noise_variance_dbm_(noise_variance_dbm),
      connections_(connections),
      mean_snr_(dbm_to_linear(transmit_power_dbm - noise_variance_dbm)) {
  if (connections < 1) throw DomainError("number of connections must be >= 1");
  if (!std::isfinite(transmit_power_dbm) || !std::isfinite(noise_variance_dbm)) {
    throw DomainError("link budget powers must be finite");
  }
}

LinkBudget LinkBudget::from_mean_snr(double mean_snr, int connections) {
  require_mean_snr(mean_snr);
  LinkBudget b(linear_to_db(mean_snr), 0.0, connections);
  b.mean_snr_ = mean_snr;
  return b;
}

double LinkBudget::transmit_power_mw() const noexcept {
  return dbm_to_linear(transmit_power_dbm_);
}

LinkBudget LinkBudget::with_connections(int connections) const {
  if (connections < 1) throw DomainError("number of connections must be >= 1");
  LinkBudget b = *this;
  b.connections_ = connections;
  return b;
}

double dbm_to_linear(double dbm) noexcept { return std::pow(10.0, dbm / 10.0); }

double linear_to_db(double linear) {
  if (!(linear > 0.0)) throw DomainError("dB conversion of a non-positive value");
  return 10.0 * std::log10(linear);
}

double blep_instantaneous(double snr, const FblConfig& cfg) {
  if (snr < 0.0 || std::isnan(snr)) throw DomainError("instantaneous SNR must be >= 0");
  if (snr < cfg.lower_knee()) return 1.0;
  if (snr >= cfg.upper_knee()) return 0.0;
  return clamp_unit(cfg.knee_slope() * (snr - cfg.knee_center()) + 0.5);
}

double erlang_pdf(double snr, int k, double mean_snr) {
  if (k < 1) throw DomainError("Erlang order must be >= 1");
  require_mean_snr(mean_snr);
  if (snr < 0.0 || std::isnan(snr)) throw DomainError("SNR must be >= 0");
  if (snr == 0.0) return k == 1 ? 1.0 / mean_snr : 0.0;
  const double x = snr / mean_snr;
  return std::exp((k - 1) * std::log(x) - x - std::lgamma(static_cast<double>(k))) / mean_snr;
}

double erlang_pdf(double snr, const LinkBudget& budget) {
  return erlang_pdf(snr, budget.connections(), budget.mean_branch_snr());
}

double regularized_upper_gamma_int(int k, double x) {
  if (k < 1) throw DomainError("integer incomplete gamma needs k >= 1");
  if (x < 0.0 || std::isnan(x)) throw DomainError("incomplete gamma argument must be >= 0");
  double term = std::exp(-x);
  double sum = term;
  for (int j = 1; j < k; ++j) {
    term *= x / j;
    sum += term;
  }
  return sum;
}

double upper_incomplete_gamma_int(int k, double x) {
  return std::tgamma(static_cast<double>(k)) * regularized_upper_gamma_int(k, x);
}

double avg_blep_mrc_unclamped(const LinkBudget& budget, const FblConfig& cfg) {
  const int k = budget.connections();
  const double gbar = budget.mean_branch_snr();
  const auto knees = scaled_knees(gbar, cfg);
  return closed_form(k, gbar, cfg, regularized_upper_gamma_int(k, knees.lower),
                     regularized_upper_gamma_int(k, knees.upper), knees);
}

double avg_blep_mrc(const LinkBudget& budget, const FblConfig& cfg) {
  return clamp_unit(avg_blep_mrc_unclamped(budget, cfg));
}

double avg_blep_mrc_relaxed(double k, double mean_snr, const FblConfig& cfg) {
  if (!(k >= 1.0)) throw DomainError("relaxed connection count must be >= 1");
  require_mean_snr(mean_snr);
  const auto knees = scaled_knees(mean_snr, cfg);
  const auto q = [k](double x) { return x <= 0.0 ? 1.0 : boost::math::gamma_q(k, x); };
  return clamp_unit(closed_form(k, mean_snr, cfg, q(knees.lower), q(knees.upper), knees));
}

double avg_blep_single_unclamped(const LinkBudget& budget, const FblConfig& cfg) {
  const double gbar = budget.mean_branch_snr();
  const auto knees = scaled_knees(gbar, cfg);
  // w1 - w2 = e^{-x1} (1 - e^{-(x2 - x1)}), written to avoid cancellation.
  const double diff = -std::exp(-knees.lower) * std::expm1(-(knees.upper - knees.lower));
  return 1.0 + cfg.knee_slope() * gbar * diff;
}

double avg_blep_single(const LinkBudget& budget, const FblConfig& cfg) {
  return clamp_unit(avg_blep_single_unclamped(budget, cfg));
}

double avg_blep_single(double mean_snr, const FblConfig& cfg) {
  return avg_blep_single(LinkBudget::from_mean_snr(mean_snr, 1), cfg);
}

QuadratureEstimate avg_blep_quadrature_estimate(const LinkBudget& budget,
                                                const FblConfig& cfg) {
  using boost::math::quadrature::gauss_kronrod;
  const int k = budget.connections();
  const double gbar = budget.mean_branch_snr();
  const auto knees = scaled_knees(gbar, cfg);

  // Integrate in x = gamma / gbar. Past `cut` the Erlang mass is below 1e-25
  // for every k we use, so the outer segments are truncated there. Above the
  // upper knee the BLEP is exactly zero.
  const double cut = k + 60.0 + 12.0 * std::sqrt(static_cast<double>(k));
  const double lo = std::min(knees.lower, cut);
  const double hi = std::min(knees.upper, cut);

  const auto density = [k](double x) {
    if (x <= 0.0) return k == 1 ? 1.0 : 0.0;
    return std::exp((k - 1) * std::log(x) - x - std::lgamma(static_cast<double>(k)));
  };
  const double slope = cfg.knee_slope();
  const double center = cfg.knee_center();
  const auto middle = [&](double x) { return density(x) * (slope * (gbar * x - center) + 0.5); };

  // Relative tolerance of the adaptive Gauss-Kronrod rule; the absolute error
  // estimate it yields is checked against 1e-8 below.
  constexpr double kRelTol = 1e-11;
  QuadratureEstimate est;
  double err = 0.0;
  if (lo > 0.0) {
    est.value += gauss_kronrod<double, 31>::integrate(density, 0.0, lo, 15, kRelTol, &err);
    est.abs_error += err;
  }
  if (hi > lo) {
    est.value += gauss_kronrod<double, 31>::integrate(middle, lo, hi, 15, kRelTol, &err);
    est.abs_error += err;
  }
  if (!(est.abs_error <= 1e-8) || !std::isfinite(est.value)) {
    throw NumericError("BLEP quadrature did not converge: K=" + std::to_string(k) +
                       " gbar=" + std::to_string(gbar) +
                       " error estimate=" + std::to_string(est.abs_error));
  }
  est.value = clamp_unit(est.value);
  return est;
}

double avg_blep_quadrature(const LinkBudget& budget, const FblConfig& cfg) {
  return avg_blep_quadrature_estimate(budget, cfg).value;
}

}  // namespace mcaoi
