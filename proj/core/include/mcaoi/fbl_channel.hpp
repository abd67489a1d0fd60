#pragma once

// Finite-blocklength block-error model over Rayleigh fading with K-branch
// maximal-ratio combining.
//
// The instantaneous BLEP is the three-segment linearisation of the normal
// approximation:
//
//   eps(g) = 1                        g <  lower knee
//          = slope * (g - center) + .5  lower knee <= g < upper knee
//          = 0                        g >= upper knee
//
// with center = e^R - 1, slope = -sqrt(m / (2 pi (e^{2R} - 1))) and knees
// center +/- 1/(2 slope). Averaging over the Erlang-distributed MRC output
// has a closed form in terms of the upper incomplete gamma function; the
// quadrature route is kept alongside it as the reference.
//
// Linear power units are milliwatt-referenced. Only P_t / sigma^2 enters the
// physics, so the reference cancels in the mean branch SNR.

namespace mcaoi {

class FblConfig {
 public:
  // info_bits L, blocklength m (channel uses), symbol duration Ts in ms.
  FblConfig(int info_bits, int blocklength, double symbol_duration_ms);

  // L = 160, m = 100, Ts = 0.005 ms (service time 0.5 ms, R = 1.6).
  static FblConfig smart_grid_default();

  // Keeps L and Ts, picks m = round(L / rate).
  static FblConfig with_rate(double rate, int info_bits = 160,
                             double symbol_duration_ms = 0.005);

  int info_bits() const noexcept { return info_bits_; }
  int blocklength() const noexcept { return blocklength_; }
  double coding_rate() const noexcept { return rate_; }
  double symbol_duration_ms() const noexcept { return symbol_duration_ms_; }
  double service_time_ms() const noexcept { return blocklength_ * symbol_duration_ms_; }
  double knee_center() const noexcept { return center_; }
  double knee_slope() const noexcept { return slope_; }
  double lower_knee() const noexcept { return center_ + 0.5 / slope_; }
  double upper_knee() const noexcept { return center_ - 0.5 / slope_; }

  // Modulation order is carried for documentation only; no formula uses it.
  int modulation_order = 0;

 private:
  int info_bits_;
  int blocklength_;
  double symbol_duration_ms_;
  double rate_;
  double center_;
  double slope_;
};

class LinkBudget {
 public:
  LinkBudget(double transmit_power_dbm, double noise_variance_dbm, int connections);

  // Budget whose per-branch mean SNR is exactly `mean_snr` (noise at 0 dBm).
  static LinkBudget from_mean_snr(double mean_snr, int connections);

  double transmit_power_dbm() const noexcept { return transmit_power_dbm_; }
  double noise_variance_dbm() const noexcept { return noise_variance_dbm_; }
  int connections() const noexcept { return connections_; }
  double mean_branch_snr() const noexcept { return mean_snr_; }
  double transmit_power_mw() const noexcept;
  double total_power_mw() const noexcept { return connections_ * transmit_power_mw(); }

  LinkBudget with_connections(int connections) const;

 private:
  double transmit_power_dbm_;
  double noise_variance_dbm_;
  int connections_;
  double mean_snr_;
};

double dbm_to_linear(double dbm) noexcept;
double linear_to_db(double linear);

double blep_instantaneous(double snr, const FblConfig& cfg);

// Density of the sum of k i.i.d. exponential branch SNRs with mean `mean_snr`.
double erlang_pdf(double snr, int k, double mean_snr);
double erlang_pdf(double snr, const LinkBudget& budget);

// Gamma(k, x) for integer k >= 1 via (k-1)! e^{-x} sum_{j<k} x^j / j!.
double upper_incomplete_gamma_int(int k, double x);
// Gamma(k, x) / (k-1)!, same series without the factorial prefactor.
double regularized_upper_gamma_int(int k, double x);

// Closed-form average BLEP with K-branch MRC, clamped to [0, 1].
double avg_blep_mrc(const LinkBudget& budget, const FblConfig& cfg);
double avg_blep_mrc_unclamped(const LinkBudget& budget, const FblConfig& cfg);

// Same closed form for real-valued k (continuous relaxation of the number of
// connections). Coincides with avg_blep_mrc at integer k.
double avg_blep_mrc_relaxed(double k, double mean_snr, const FblConfig& cfg);

// Single-link closed form 1 + slope * gbar * (w1 - w2); K is ignored.
double avg_blep_single(const LinkBudget& budget, const FblConfig& cfg);
double avg_blep_single_unclamped(const LinkBudget& budget, const FblConfig& cfg);
double avg_blep_single(double mean_snr, const FblConfig& cfg);

struct QuadratureEstimate {
  double value = 0.0;
  double abs_error = 0.0;  // summed Gauss-Kronrod error estimates
};

// Numeric integral of erlang_pdf * blep_instantaneous, split at both knees.
// Throws NumericError if the error estimate exceeds 1e-8.
QuadratureEstimate avg_blep_quadrature_estimate(const LinkBudget& budget,
                                                const FblConfig& cfg);
double avg_blep_quadrature(const LinkBudget& budget, const FblConfig& cfg);

}  // namespace mcaoi
