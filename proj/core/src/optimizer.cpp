#include "mcaoi/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mcaoi/errors.hpp"

namespace mcaoi {
namespace {

constexpr int kMaxDinkelbachIterations = 100;
constexpr double kDinkelbachTolerance = 1e-9;
constexpr double kGridStep = 0.25;

struct Fraction {
  double numerator;    // v(K) = (1 - eps_K) / K
  double denominator;  // g(K) = Abar_K
};

Fraction fraction_relaxed(double k, const OptimizerParams& p) {
  const double eps = avg_blep_mrc_relaxed(k, p.mean_snr(), p.channel);
  const double m = p.service_time_ms();
  if (eps >= 1.0) return {0.0, std::numeric_limits<double>::infinity()};
  return {(1.0 - eps) / k, (1.0 / p.arrival_rate + m) / (1.0 - eps) + m};
}

double eta_from_blep(double k, double eps, const OptimizerParams& p) {
  if (eps >= 1.0) return 0.0;
  const double m = p.service_time_ms();
  const double q = 1.0 - eps;
  return p.channel.info_bits() * q * q /
         (m * k * dbm_to_linear(p.transmit_power_dbm) * (1.0 / p.arrival_rate + m + m * q));
}

// argmax of v(K) - lambda g(K) over [lo, hi]: scan a grid that contains every
// integer, then refine the best cell by golden-section search. v is not
// concave everywhere, so a pure golden-section search is not safe.
double inner_argmax(double lambda, double lo, double hi, double incumbent,
                    const OptimizerParams& p) {
  auto h = [&](double k) {
    const auto f = fraction_relaxed(k, p);
    return std::isinf(f.denominator) ? -std::numeric_limits<double>::infinity()
                                     : f.numerator - lambda * f.denominator;
  };
  double best_k = incumbent;
  double best_h = h(incumbent);
  for (double k = lo; k <= hi + 1e-12; k += kGridStep) {
    const double kk = std::min(k, hi);
    const double v = h(kk);
    if (v > best_h) {
      best_h = v;
      best_k = kk;
    }
  }
  double a = std::max(lo, best_k - kGridStep);
  double b = std::min(hi, best_k + kGridStep);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double hc = h(c);
  double hd = h(d);
  while (b - a > 1e-10) {
    if (hc > hd) {
      b = d;
      d = c;
      hd = hc;
      c = b - inv_phi * (b - a);
      hc = h(c);
    } else {
      a = c;
      c = d;
      hc = hd;
      d = a + inv_phi * (b - a);
      hd = h(d);
    }
  }
  const double k_gs = 0.5 * (a + b);
  return h(k_gs) > best_h ? k_gs : best_k;
}

OptimizerResult pick_best(const std::vector<int>& candidates, const OptimizerParams& p,
                          OptimizerResult res) {
  bool found = false;
  for (int k : candidates) {
    if (!res.range.admits(k)) continue;
    const double eta = ee_paoi_ratio(k, p);
    if (!found || eta > res.eta_opt || (eta == res.eta_opt && k < res.k_opt)) {
      found = true;
      res.k_opt = k;
      res.eta_opt = eta;
    }
  }
  if (!found) {
    const std::string c = res.range.empty() ? res.range.binding_constraint()
                                            : std::string("C2: PAoI violation");
    throw InfeasibleError(c, "no feasible number of connections (" + c + ")");
  }
  return res;
}

std::vector<KRow> build_table(const OptimizerParams& p, const FeasibleRange& range) {
  std::vector<KRow> rows;
  const int last = std::max(range.k_max, 2);
  rows.reserve(static_cast<std::size_t>(last));
  for (int k = 1; k <= last; ++k) rows.push_back(evaluate_k(k, p, range));
  return rows;
}

}  // namespace

void OptimizerParams::validate() const {
  if (!(arrival_rate > 0.0)) throw DomainError("arrival rate must be positive");
  if (max_total_power_dbm < transmit_power_dbm) {
    throw DomainError("P_max must be at least the per-link transmit power");
  }
  if (!(max_violation > 0.0 && max_violation <= 1.0)) {
    throw DomainError("maximum violation probability must lie in (0, 1]");
  }
  if (!(paoi_threshold_ms > 2.0 * service_time_ms())) {
    throw DomainError("PAoI threshold must exceed twice the service time");
  }
  if (search_cap < 1) throw DomainError("search cap must be >= 1");
}

TrafficParams OptimizerParams::traffic(double eps) const {
  return TrafficParams{arrival_rate, service_time_ms(), eps, 1};
}

std::string FeasibleRange::binding_constraint() const {
  if (!empty()) return {};
  if (k_violation > k_max) return "C2: PAoI violation";
  return "C1: total transmit power";
}

std::string to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::kExhaustive: return "exhaustive";
    case SolveMethod::kDinkelbach: return "dinkelbach";
    case SolveMethod::kFallback: return "fallback";
  }
  return "?";
}

double ee_paoi_ratio(int k, const OptimizerParams& p) {
  if (k < 1) throw DomainError("number of connections must be >= 1");
  const LinkBudget budget(p.transmit_power_dbm, p.noise_variance_dbm, k);
  return eta_from_blep(k, avg_blep_mrc(budget, p.channel), p);
}

double ee_paoi_ratio_relaxed(double k, const OptimizerParams& p) {
  return eta_from_blep(k, avg_blep_mrc_relaxed(k, p.mean_snr(), p.channel), p);
}

KRow evaluate_k(int k, const OptimizerParams& p, const FeasibleRange& range) {
  const LinkBudget budget(p.transmit_power_dbm, p.noise_variance_dbm, k);
  const double eps = avg_blep_mrc(budget, p.channel);
  KRow row{k, eps, std::numeric_limits<double>::infinity(), 1.0, 0.0, range.admits(k)};
  if (eps < 1.0) {
    const auto tp = p.traffic(eps);
    row.avg_paoi_ms = metrics_nr(tp).avg_paoi_ms;
    row.violation = paoi_violation(p.paoi_threshold_ms, tp);
    row.eta = eta_from_blep(k, eps, p);
  }
  return row;
}

FeasibleRange feasibility_bounds(const OptimizerParams& p) {
  p.validate();
  FeasibleRange r;
  const double ratio = dbm_to_linear(p.max_total_power_dbm - p.transmit_power_dbm);
  const auto raw = static_cast<long long>(std::floor(ratio + 1e-9));
  r.capped = raw > p.search_cap;
  r.k_max = static_cast<int>(std::min<long long>(raw, p.search_cap));

  const double m = p.service_time_ms();
  r.blep_bound = 1.0 - std::log(p.max_violation) /
                           (p.arrival_rate * (2.0 * m - p.paoi_threshold_ms));
  r.k_violation = p.search_cap + 1;
  for (int k = 1; k <= p.search_cap; ++k) {
    const double eps = avg_blep_mrc(LinkBudget(p.transmit_power_dbm, p.noise_variance_dbm, k),
                                    p.channel);
    if (eps < 1.0 && paoi_violation(p.paoi_threshold_ms, p.traffic(eps)) <= p.max_violation) {
      r.k_violation = k;
      break;
    }
  }
  r.k_min = std::max(3, r.k_violation);
  return r;
}

FeasibleRange feasible_range(const OptimizerParams& p) {
  auto r = feasibility_bounds(p);
  if (r.empty()) {
    std::ostringstream os;
    os << "empty feasible range [" << r.k_min << ", " << r.k_max << "] ("
       << r.binding_constraint() << ")";
    throw InfeasibleError(r.binding_constraint(), os.str());
  }
  return r;
}

OptimizerResult optimize_exhaustive(const OptimizerParams& p) {
  OptimizerResult res;
  res.range = feasibility_bounds(p);
  res.method = SolveMethod::kExhaustive;
  res.table = build_table(p, res.range);
  std::vector<int> candidates;
  for (int k = 1; k <= res.range.k_max; ++k) candidates.push_back(k);
  return pick_best(candidates, p, std::move(res));
}

OptimizerResult optimize_dinkelbach(const OptimizerParams& p) {
  OptimizerResult res;
  res.range = feasibility_bounds(p);
  res.table = build_table(p, res.range);
  if (res.range.empty()) {
    res.method = SolveMethod::kFallback;
    return pick_best({1, 2}, p, std::move(res));
  }
  res.method = SolveMethod::kDinkelbach;

  const double lo = res.range.k_min;
  const double hi = res.range.k_max;
  double k_star = lo;
  auto f = fraction_relaxed(k_star, p);
  double lambda = f.numerator / f.denominator;
  res.ratio_trace.push_back(lambda);

  bool converged = false;
  for (int it = 1; it <= kMaxDinkelbachIterations; ++it) {
    res.iterations = it;
    k_star = inner_argmax(lambda, lo, hi, k_star, p);
    f = fraction_relaxed(k_star, p);
    res.residual = f.numerator - lambda * f.denominator;
    if (std::abs(res.residual) <= kDinkelbachTolerance) {
      converged = true;
      break;
    }
    lambda = f.numerator / f.denominator;
    res.ratio_trace.push_back(lambda);
  }
  if (!converged) {
    std::ostringstream os;
    os << "Dinkelbach did not converge in " << kMaxDinkelbachIterations
       << " iterations; lambda trace:";
    for (double l : res.ratio_trace) os << ' ' << l;
    throw NumericError(os.str());
  }
  res.k_relaxed = k_star;
  res.eta_relaxed = ee_paoi_ratio_relaxed(k_star, p);

  const int below = static_cast<int>(std::floor(k_star));
  const int above = static_cast<int>(std::ceil(k_star));
  std::vector<int> candidates{1, 2};
  for (int k : {below, above}) {
    if (k >= res.range.k_min && k <= res.range.k_max) candidates.push_back(k);
  }
  return pick_best(candidates, p, std::move(res));
}

double snr_threshold(const FblConfig& cfg) { return 2.0 * std::expm1(cfg.coding_rate()); }

EePaoiGain ee_paoi_gain(int k, const OptimizerParams& p) {
  if (k < 2) throw DomainError("EE-PAoI gain compares K >= 2 against a single link");
  const double e = avg_blep_single(p.mean_snr(), p.channel);
  if (e >= 1.0) throw DivergenceError("single-link average BLEP is 1; gain undefined");
  const double ek =
      avg_blep_mrc(LinkBudget(p.transmit_power_dbm, p.noise_variance_dbm, k), p.channel);
  if (ek >= 1.0) return {0.0, 0.0};
  const double inv = 1.0 / p.arrival_rate;
  const double m = p.service_time_ms();
  const double q = 1.0 - e;
  const double qk = 1.0 - ek;
  EePaoiGain g;
  g.exact = ((inv + m) * (qk / q) + m * qk) / (k * (inv + m) * (q / qk) + k * m * q);
  g.high_rate = qk * qk * (2.0 - e) / (k * q * q * (2.0 - ek));
  return g;
}

std::vector<ConcavityViolation> concavity_audit(const FblConfig& cfg,
                                                const std::vector<double>& mean_snrs,
                                                double k_lo, double k_hi, double tolerance) {
  std::vector<ConcavityViolation> out;
  for (double gbar : mean_snrs) {
    auto v = [&](double k) { return (1.0 - avg_blep_mrc_relaxed(k, gbar, cfg)) / k; };
    for (double k = k_lo + 1.0; k <= k_hi - 1.0 + 1e-12; k += 1.0) {
      const double d2 = v(k + 1.0) - 2.0 * v(k) + v(k - 1.0);
      if (d2 > tolerance) out.push_back({gbar, k, d2});
    }
  }
  return out;
}

}  // namespace mcaoi
