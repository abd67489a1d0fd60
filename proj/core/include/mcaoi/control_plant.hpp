#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mcaoi/queue_sim.hpp"

// LTI plant x_{n+1} = A x_n + B u_n + w_n, w ~ N(0, R_w), controlled through
// an estimator that only sees the freshest delivered state. With AoI Delta_n
// the controller forms
//
//   xhat_n = A^Delta x_{n-Delta} + sum_{j=1..Delta} A^{j-1} B u_{n-j}
//
// and applies u_n = G xhat_n, G the least-squares solution of B G = -A.

namespace mcaoi {

struct PlantModel {
  Eigen::MatrixXd system;       // A, d x d
  Eigen::MatrixXd input;        // B, d x q
  Eigen::MatrixXd noise_cov;    // R_w, d x d, symmetric PSD
  Eigen::MatrixXd gain;         // G, q x d
  double gain_residual = 0.0;   // ||B G + A||_F
  double state_threshold = 0.0; // norm threshold for a risky state; <= 0 disables
  double timestep_ms = 0.5;

  // Load-frequency-control plant: A = [[1.17, .67], [.67, .37]],
  // B = [.67, .37]^T, R_w = 1e-6 I, timestep = 0.5 ms, gain from
  // control_gain_lsq and no threshold.
  static PlantModel smart_grid_default();

  int state_dim() const noexcept { return static_cast<int>(system.rows()); }
  int input_dim() const noexcept { return static_cast<int>(input.cols()); }
  void validate() const;
};

struct GainSolution {
  Eigen::MatrixXd gain;
  double residual;  // ||B G + A||_F
};

// G = -(B^T B)^{-1} B^T A. Throws DomainError when B is rank deficient.
GainSolution control_gain_lsq(const Eigen::MatrixXd& system, const Eigen::MatrixXd& input);

// sum_{i=1..Delta} A^i R_w (A^T)^i + R_w.
Eigen::MatrixXd covariance_from_aoi(int delta, const PlantModel& plant);

// sum_{i=1..Delta} A^{i-1} R_w (A^T)^{i-1}; zero at Delta = 0.
Eigen::MatrixXd estimation_error_covariance(int delta, const PlantModel& plant);

// z * sqrt(largest eigenvalue of covariance_from_aoi(delta)). The default z
// is the two-sided 1e-4 Gaussian quantile.
double calibrated_state_threshold(const PlantModel& plant, int delta, double z = 3.890591886);

struct ClosedLoopOptions {
  bool keep_trace = true;
  Eigen::VectorXd initial_state;  // empty means zero
};

struct StateTrace {
  // Column n holds step n. Empty unless keep_trace.
  Eigen::MatrixXd states;
  Eigen::MatrixXd estimates;
  Eigen::MatrixXd errors;
  std::vector<int> aoi_steps;
  std::vector<std::uint8_t> violated;

  std::size_t steps = 0;
  std::size_t violations = 0;
  // Raw second moments E[x x^T] and E[e e^T] over all steps.
  Eigen::MatrixXd state_second_moment;
  Eigen::MatrixXd error_second_moment;
  // max_n ||e_n - sum_i A^{i-1} w_{n-i}|| and max_n ||x_n||.
  double max_error_identity_gap = 0.0;
  double max_state_norm = 0.0;

  double violation_frequency() const noexcept {
    return steps == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(steps);
  }
};

StateTrace simulate_closed_loop(const PlantModel& plant, std::span<const int> aoi_steps,
                                std::uint64_t noise_seed, std::size_t n_steps,
                                const ClosedLoopOptions& options = {});

// Samples Delta(t) at t = n * timestep and floor-divides by the timestep.
// Throws DomainError when the trace ends before n_steps samples.
std::vector<int> aoi_trace_to_steps(std::span<const AoiSegment> trace, double timestep_ms,
                                    std::size_t n_steps);

// Number of whole timesteps covered by the trace.
std::size_t trace_step_capacity(std::span<const AoiSegment> trace, double timestep_ms);

}  // namespace mcaoi
