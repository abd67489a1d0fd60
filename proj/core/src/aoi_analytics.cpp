#include "mcaoi/aoi_analytics.hpp"

#include <cmath>
#include <string>

#include "mcaoi/diagnostics.hpp"
#include "mcaoi/errors.hpp"

namespace mcaoi {
namespace {

void validate(const TrafficParams& tp, double eps) {
  if (!(tp.arrival_rate > 0.0)) throw DomainError("arrival rate must be positive");
  if (!(tp.service_time_ms > 0.0)) throw DomainError("service time must be positive");
  if (!(eps >= 0.0) || eps > 1.0) throw DomainError("average BLEP must lie in [0, 1]");
  if (eps >= 1.0) {
    throw DivergenceError("average BLEP is 1: no update is ever delivered, age diverges");
  }
  if (1.0 / tp.arrival_rate < tp.service_time_ms) {
    warn("1/lambda < M: outside the queueing-stability convention 1/lambda >= M");
  }
}

// Shared by NR and K-repetition, which differ only in the service time and
// the per-packet failure probability.
AoiMetrics blocking_server(double lambda, double service, double eps, Scheme scheme) {
  const double lm = lambda * service;
  AoiMetrics m;
  m.scheme = scheme;
  m.avg_paoi_ms = (1.0 / lambda + service) / (1.0 - eps) + service;
  m.avg_aoi_ms = (1.0 + lm) * (1.0 + eps) / (2.0 * lambda * (1.0 - eps)) +
                 (1.0 + 2.0 * lm + 2.0 * lm * lm) / (2.0 * lambda + 2.0 * lambda * lm);
  return m;
}

}  // namespace

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::kMultiConnectivity: return "nr";
    case Scheme::kArq: return "arq";
    case Scheme::kRepetition: return "kr";
  }
  return "?";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "nr" || name == "NR" || name == "nr-mrc") return Scheme::kMultiConnectivity;
  if (name == "arq" || name == "ARQ") return Scheme::kArq;
  if (name == "kr" || name == "KR") return Scheme::kRepetition;
  throw DomainError("unknown scheme '" + std::string(name) + "' (expected nr, arq or kr)");
}

AoiMetrics metrics_nr(const TrafficParams& tp) {
  validate(tp, tp.avg_blep);
  return blocking_server(tp.arrival_rate, tp.service_time_ms, tp.avg_blep,
                         Scheme::kMultiConnectivity);
}

AoiMetrics metrics_arq(const TrafficParams& tp) {
  validate(tp, tp.avg_blep);
  const double lambda = tp.arrival_rate;
  const double m = tp.service_time_ms;
  const double eps = tp.avg_blep;
  const double q = 1.0 - eps;
  AoiMetrics out;
  out.scheme = Scheme::kArq;
  out.avg_paoi_ms = 2.0 * m / q + 1.0 / lambda;
  out.avg_aoi_ms = (2.0 * q + lambda * lambda * m * m + 2.0 * lambda * m * q) /
                       (2.0 * lambda * (q + lambda * m)) +
                   m * (1.0 + eps) / q;
  return out;
}

AoiMetrics metrics_kr(const TrafficParams& tp) {
  if (tp.repetitions < 1) throw DomainError("number of repetitions must be >= 1");
  validate(tp, tp.avg_blep);
  const double eps_k = std::pow(tp.avg_blep, tp.repetitions);
  return blocking_server(tp.arrival_rate, tp.repetitions * tp.service_time_ms, eps_k,
                         Scheme::kRepetition);
}

AoiMetrics metrics(Scheme scheme, const TrafficParams& tp) {
  switch (scheme) {
    case Scheme::kMultiConnectivity: return metrics_nr(tp);
    case Scheme::kArq: return metrics_arq(tp);
    case Scheme::kRepetition: return metrics_kr(tp);
  }
  throw DomainError("unknown scheme");
}

PaoiLimits paoi_limits_nr(const TrafficParams& base, const FblConfig& cfg,
                          const LinkBudget& budget) {
  return {metrics_nr(base.with_blep(avg_blep_single(budget, cfg))),
          metrics_nr(base.with_blep(0.0))};
}

double paoi_pdf(double x_ms, const TrafficParams& tp) {
  const double floor = 2.0 * tp.service_time_ms;
  if (x_ms <= floor) return 0.0;
  const double rate = tp.arrival_rate * (1.0 - tp.avg_blep);
  return rate * std::exp(rate * (floor - x_ms));
}

double paoi_cdf(double x_ms, const TrafficParams& tp) {
  const double floor = 2.0 * tp.service_time_ms;
  if (x_ms <= floor) return 0.0;
  const double rate = tp.arrival_rate * (1.0 - tp.avg_blep);
  return -std::expm1(rate * (floor - x_ms));
}

double paoi_violation(double zeta_ms, const TrafficParams& tp) {
  const double floor = 2.0 * tp.service_time_ms;
  if (zeta_ms <= floor) {
    warn("PAoI threshold " + std::to_string(zeta_ms) + " ms is not above 2M = " +
         std::to_string(floor) + " ms; violation probability is 1");
    return 1.0;
  }
  return std::exp(tp.arrival_rate * (1.0 - tp.avg_blep) * (floor - zeta_ms));
}

double paoi_distribution_mean(const TrafficParams& tp) {
  validate(tp, tp.avg_blep);
  return 2.0 * tp.service_time_ms + 1.0 / (tp.arrival_rate * (1.0 - tp.avg_blep));
}

ViolationBounds violation_bounds(double zeta_ms, const TrafficParams& tp,
                                 const FblConfig& cfg, const LinkBudget& budget) {
  return {paoi_violation(zeta_ms, tp.with_blep(avg_blep_single(budget, cfg))),
          paoi_violation(zeta_ms, tp.with_blep(0.0))};
}

double arq_nr_gap(const TrafficParams& tp) {
  validate(tp, tp.avg_blep);
  const double inv = 1.0 / tp.arrival_rate;
  return (tp.service_time_ms - inv) / (1.0 - tp.avg_blep) + inv - tp.service_time_ms;
}

}  // namespace mcaoi
