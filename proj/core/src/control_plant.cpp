#include "mcaoi/control_plant.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mcaoi/errors.hpp"

namespace mcaoi {
namespace {

Eigen::MatrixXd noise_factor(const Eigen::MatrixXd& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

}  // namespace

PlantModel PlantModel::smart_grid_default() {
  PlantModel p;
  p.system.resize(2, 2);
  p.system << 1.17, 0.67, 0.67, 0.37;
  p.input.resize(2, 1);
  p.input << 0.67, 0.37;
  p.noise_cov = 1e-6 * Eigen::MatrixXd::Identity(2, 2);
  auto g = control_gain_lsq(p.system, p.input);
  p.gain = std::move(g.gain);
  p.gain_residual = g.residual;
  p.timestep_ms = 0.5;
  return p;
}

void PlantModel::validate() const {
  const auto d = system.rows();
  if (d == 0 || system.cols() != d) throw DomainError("system matrix must be square");
  if (input.rows() != d) throw DomainError("input matrix must have d rows");
  if (noise_cov.rows() != d || noise_cov.cols() != d) {
    throw DomainError("noise covariance must be d x d");
  }
  if (gain.rows() != input.cols() || gain.cols() != d) {
    throw DomainError("control gain must be q x d");
  }
  if ((noise_cov - noise_cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw DomainError("noise covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(noise_cov, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-15) throw DomainError("noise covariance must be PSD");
  if (!(timestep_ms > 0.0)) throw DomainError("timestep must be positive");
}

GainSolution control_gain_lsq(const Eigen::MatrixXd& system, const Eigen::MatrixXd& input) {
  if (system.rows() != input.rows()) throw DomainError("A and B row counts differ");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(input);
  if (qr.rank() < input.cols()) throw DomainError("input matrix B is rank deficient");
  const Eigen::MatrixXd btb = input.transpose() * input;
  Eigen::MatrixXd g = -btb.ldlt().solve(input.transpose() * system);
  const double residual = (input * g + system).norm();
  return {std::move(g), residual};
}

Eigen::MatrixXd covariance_from_aoi(int delta, const PlantModel& plant) {
  if (delta < 0) throw DomainError("AoI in steps must be >= 0");
  const auto& a = plant.system;
  Eigen::MatrixXd sum = plant.noise_cov;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 1; i <= delta; ++i) {
    power = a * power;
    sum += power * plant.noise_cov * power.transpose();
  }
  return 0.5 * (sum + sum.transpose());
}

Eigen::MatrixXd estimation_error_covariance(int delta, const PlantModel& plant) {
  if (delta < 0) throw DomainError("AoI in steps must be >= 0");
  const auto& a = plant.system;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  for (int i = 1; i <= delta; ++i) {
    sum += power * plant.noise_cov * power.transpose();
    power = a * power;
  }
  return sum;
}

double calibrated_state_threshold(const PlantModel& plant, int delta, double z) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(covariance_from_aoi(delta, plant),
                                                    Eigen::EigenvaluesOnly);
  return z * std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
}

StateTrace simulate_closed_loop(const PlantModel& plant, std::span<const int> aoi_steps,
                                std::uint64_t noise_seed, std::size_t n_steps,
                                const ClosedLoopOptions& options) {
  plant.validate();
  if (aoi_steps.size() < n_steps) throw DomainError("AoI sequence shorter than horizon");
  const int d = plant.state_dim();
  const int q = plant.input_dim();
  const auto& a = plant.system;
  const auto& b = plant.input;

  int max_delta = 0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    if (aoi_steps[n] < 0) throw DomainError("AoI steps must be >= 0");
    max_delta = std::max(max_delta, aoi_steps[n]);
  }
  // Ring buffers of the last max_delta + 1 states, inputs and noise draws.
  const std::size_t ring = static_cast<std::size_t>(max_delta) + 1;
  Eigen::MatrixXd xs = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(ring));
  Eigen::MatrixXd us = Eigen::MatrixXd::Zero(q, static_cast<Eigen::Index>(ring));
  Eigen::MatrixXd ws = Eigen::MatrixXd::Zero(d, static_cast<Eigen::Index>(ring));
  auto slot = [ring](std::size_t n) { return static_cast<Eigen::Index>(n % ring); };

  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  if (options.initial_state.size() == d) x = options.initial_state;

  StateTrace tr;
  tr.steps = n_steps;
  tr.state_second_moment = Eigen::MatrixXd::Zero(d, d);
  tr.error_second_moment = Eigen::MatrixXd::Zero(d, d);
  if (options.keep_trace) {
    const auto cols = static_cast<Eigen::Index>(n_steps);
    tr.states.resize(d, cols);
    tr.estimates.resize(d, cols);
    tr.errors.resize(d, cols);
    tr.aoi_steps.resize(n_steps);
    tr.violated.resize(n_steps);
  }

  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd factor = noise_factor(plant.noise_cov);
  Eigen::VectorXd z(d), xhat(d), e_direct(d), w(d), u(q);

  for (std::size_t n = 0; n < n_steps; ++n) {
    xs.col(slot(n)) = x;
    const auto delta = static_cast<std::size_t>(std::min<std::size_t>(aoi_steps[n], n));

    xhat = xs.col(slot(n - delta));
    e_direct.setZero();
    for (std::size_t i = n - delta; i < n; ++i) {
      xhat = a * xhat + b * us.col(slot(i));
      e_direct = a * e_direct + ws.col(slot(i));
    }
    const Eigen::VectorXd e = x - xhat;

    u = plant.gain * xhat;
    for (int i = 0; i < d; ++i) z(i) = normal(rng);
    w = factor * z;
    us.col(slot(n)) = u;
    ws.col(slot(n)) = w;

    const double norm = x.norm();
    const bool bad = plant.state_threshold > 0.0 && norm > plant.state_threshold;
    tr.violations += bad ? 1 : 0;
    tr.state_second_moment.noalias() += x * x.transpose();
    tr.error_second_moment.noalias() += e * e.transpose();
    tr.max_error_identity_gap = std::max(tr.max_error_identity_gap, (e - e_direct).norm());
    tr.max_state_norm = std::max(tr.max_state_norm, norm);
    if (options.keep_trace) {
      const auto c = static_cast<Eigen::Index>(n);
      tr.states.col(c) = x;
      tr.estimates.col(c) = xhat;
      tr.errors.col(c) = e;
      tr.aoi_steps[n] = static_cast<int>(delta);
      tr.violated[n] = bad ? 1 : 0;
    }

    x = a * x + b * u + w;
  }
  if (n_steps > 0) {
    tr.state_second_moment /= static_cast<double>(n_steps);
    tr.error_second_moment /= static_cast<double>(n_steps);
  }
  return tr;
}

std::size_t trace_step_capacity(std::span<const AoiSegment> trace, double timestep_ms) {
  if (!(timestep_ms > 0.0)) throw DomainError("timestep must be positive");
  if (trace.empty()) return 0;
  // Samples at t = n * timestep must fall strictly before the last t_end.
  const double end = trace.back().t_end;
  const auto n = static_cast<std::size_t>(std::ceil(end / timestep_ms));
  return n;
}

std::vector<int> aoi_trace_to_steps(std::span<const AoiSegment> trace, double timestep_ms,
                                    std::size_t n_steps) {
  if (!(timestep_ms > 0.0)) throw DomainError("timestep must be positive");
  if (n_steps > 0 && (trace.empty() || (n_steps - 1) * timestep_ms >= trace.back().t_end)) {
    throw DomainError("AoI trace covers fewer than " + std::to_string(n_steps) + " steps");
  }
  std::vector<int> out;
  out.reserve(n_steps);
  std::size_t seg = 0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = static_cast<double>(n) * timestep_ms;
    while (seg + 1 < trace.size() && trace[seg].t_end <= t) ++seg;
    const auto& s = trace[seg];
    const double span = s.t_end - s.t_start;
    const double frac = span > 0.0 ? (t - s.t_start) / span : 0.0;
    const double age = s.aoi_start + frac * (s.aoi_end - s.aoi_start);
    out.push_back(static_cast<int>(std::floor(age / timestep_ms + 1e-12)));
  }
  return out;
}

}  // namespace mcaoi
