#pragma once

#include <string_view>

#include "mcaoi/fbl_channel.hpp"

// Closed-form average AoI / peak AoI for the three transmission schemes and
// the peak-AoI distribution of the multi-connectivity scheme.
//
// Every formula follows from Abar = E[Y] + E[S] and
// Dbar = E[Y^2] / (2 E[Y]) + E[S], where S is the service time of a
// delivered update and Y the time between consecutive deliveries. Arrivals
// are Poisson(lambda), the buffer is empty and packets arriving while the
// links are busy are dropped.

namespace mcaoi {

enum class Scheme { kMultiConnectivity, kArq, kRepetition };

std::string_view to_string(Scheme s) noexcept;
Scheme scheme_from_string(std::string_view name);

struct TrafficParams {
  double arrival_rate = 1.0;     // lambda, packets per ms
  double service_time_ms = 0.5;  // M
  double avg_blep = 0.0;         // eps_K (NR), single-link eps (ARQ, KR)
  int repetitions = 1;           // K; only K-repetition reads it

  TrafficParams with_blep(double eps) const {
    TrafficParams t = *this;
    t.avg_blep = eps;
    return t;
  }
};

struct AoiMetrics {
  double avg_aoi_ms = 0.0;
  double avg_paoi_ms = 0.0;
  Scheme scheme = Scheme::kMultiConnectivity;
};

// Multi-connectivity without retransmission:
//   Abar = (1/lambda + M) / (1 - eps_K) + M
//   Dbar = (1 + lambda M)(1 + eps_K) / (2 lambda (1 - eps_K))
//          + (1 + 2 lambda M + 2 lambda^2 M^2) / (2 lambda + 2 lambda^2 M)
AoiMetrics metrics_nr(const TrafficParams& tp);

// Single link, retransmit until success with instantaneous feedback.
AoiMetrics metrics_arq(const TrafficParams& tp);

// Single link, K back-to-back copies without feedback.
AoiMetrics metrics_kr(const TrafficParams& tp);

AoiMetrics metrics(Scheme scheme, const TrafficParams& tp);

struct PaoiLimits {
  AoiMetrics single;    // K = 1 with the single-link average BLEP
  AoiMetrics infinite;  // K -> infinity, eps_K = 0
};

PaoiLimits paoi_limits_nr(const TrafficParams& base, const FblConfig& cfg,
                          const LinkBudget& budget);

// Peak-AoI density, CDF and tail for the multi-connectivity scheme: a
// 2M-shifted exponential with rate lambda (1 - eps_K).
double paoi_pdf(double x_ms, const TrafficParams& tp);
double paoi_cdf(double x_ms, const TrafficParams& tp);
double paoi_violation(double zeta_ms, const TrafficParams& tp);

// Mean of the shifted-exponential law above, 2M + 1/(lambda (1 - eps_K)).
// It differs from metrics_nr().avg_paoi_ms whenever eps_K > 0.
double paoi_distribution_mean(const TrafficParams& tp);

struct ViolationBounds {
  double upper;  // single link, eps from the K = 1 closed form
  double lower;  // error-free, eps = 0
};

ViolationBounds violation_bounds(double zeta_ms, const TrafficParams& tp,
                                 const FblConfig& cfg, const LinkBudget& budget);

// Abar_ARQ - Abar_NR at equal eps: (M - 1/lambda)/(1 - eps) + 1/lambda - M.
double arq_nr_gap(const TrafficParams& tp);

}  // namespace mcaoi
