#pragma once

#include <Eigen/Dense>
#include <vector>

#include "starswipt/scenario.hpp"

namespace starswipt {

// Per-element energy-splitting coefficients. beta_* are the squared
// amplitudes (beta_r + beta_t = 1 per element), theta_* the phase shifts
// in (0, 2*pi]. The surface diagonal applied to the incident signal is
// diag(sqrt(beta) * exp(-i*theta)); the conjugate convention comes from
// the trailing Hermitian transpose in the coefficient-vector definition
// and is used consistently everywhere, including the SDR lifting.
struct StarCoefficients {
  RVec beta_r, beta_t;    // length N, in [0, 1]
  RVec theta_r, theta_t;  // length N, in (0, 2*pi]

  int num_elements() const { return static_cast<int>(beta_r.size()); }

  // Diagonal of Phi_d: sqrt(beta_n) * exp(-i * theta_n).
  CVec phi(Side side) const;
  // Lifted vector v_d = conj(phi_d): sqrt(beta_n) * exp(+i * theta_n).
  CVec lifted_v(Side side) const;

  static StarCoefficients uniform_half(int n);
};

// Normalizes an angle into (0, 2*pi].
double wrap_theta(double theta);

struct BeamformerSet {
  CMat f;  // M x K, column k serves user k; units sqrt(watts)

  int num_users() const { return static_cast<int>(f.cols()); }
  double total_power() const { return f.squaredNorm(); }
};

struct PowerSplit {
  RVec rho;  // K entries in [0, 1]; rho to ID, 1-rho to EH
};

struct SolutionState {
  BeamformerSet beams;
  StarCoefficients star;
  PowerSplit ps;
};

struct FeasibilityReport {
  bool power_ok = false;
  std::vector<bool> eh_ok;  // per user
  bool coupling_ok = false;
  bool bounds_ok = false;
  double worst_violation = 0.0;

  bool all_ok() const;
};

// Effective downlink row vector h_k^H + g_k^H * Phi_d * G for user k,
// with Phi_d chosen by the user's side tag.
Eigen::RowVectorXcd effective_channel(const ChannelSet& channels, const StarCoefficients& star, int user_k);

struct SinrRate {
  double sinr = 0.0;
  double rate = 0.0;  // bits/s/Hz
};

// SINR = gamma |a f_k|^2 / (gamma sum_{j != k} |a f_j|^2 + 1 + delta2*gamma/rho_k)
// with gamma = 1/sigma2; rate = log2(1 + SINR). rho = 0 yields SINR 0 when
// delta2 > 0; with delta2 = 0 the processing-noise term vanishes entirely.
SinrRate sinr_and_rate(const ChannelSet& channels, const SolutionState& solution,
                       const SystemConfig& config, int user_k);

double sum_rate(const ChannelSet& channels, const SolutionState& solution, const SystemConfig& config);

// E_k = eta * (1 - rho_k) * (sum_j |a f_j|^2 + sigma2), watts.
double harvested_energy(const ChannelSet& channels, const SolutionState& solution,
                        const SystemConfig& config, int user_k);

// Checks C1-C4: total power, per-user EH threshold, amplitude coupling and
// box bounds, all within a relative/absolute tolerance.
FeasibilityReport check_feasibility(const ChannelSet& channels, const SolutionState& solution,
                                    const SystemConfig& config, double tol);

}  // namespace starswipt
