#pragma once

#include <vector>

#include "starswipt/conic.hpp"
#include "starswipt/model.hpp"

namespace starswipt::sdr {

// Weights of the logarithm surrogate, one per user. s drives the beamformer
// subproblem, q the coefficient subproblem; at a fixed iterate both equal
// 1/x_k with x_k the interference-plus-noise term of that user's SINR, which
// makes the concave minorant touch the true weighted rate (see
// surrogate_value). They are split because the alternating optimizer
// refreshes them at different iterates.
struct AuxiliaryWeights {
  RVec s, q;
};

struct LiftedBeamformers {
  std::vector<CMat> F;  // K PSD matrices, M x M, watts
};

// Lifted coefficient matrices V_d = u_d u_d^H with u_d = [1; conj(phi_d)].
// The first diagonal entry is pinned by a normalization row; the remaining
// diagonals carry the squared amplitudes and couple across the two sides.
struct LiftedStarMatrices {
  CMat V_r, V_t;  // (N+1) x (N+1) PSD
};

// How the coefficient subproblem treats the surface:
//   Free        both matrices optimized with per-element coupling rows,
//   EqualHalf   amplitudes frozen at 1/2 on both sides, phases free,
//   ReflectOnly only the reflection matrix is a variable; the transmission
//               side is dark and its users keep the direct link only.
enum class StarMode { Free, EqualHalf, ReflectOnly };

// x_k = gamma * sum_{j != k} |a_k f_j|^2 + 1 + delta2 * gamma / rho_k with
// gamma = 1/sigma2; both weights are set to 1/x_k. paper_literal evaluates
// the denominator as gamma * sum + (delta2 * gamma + 1) / rho + 1 instead,
// for comparison runs only. Throws std::domain_error when rho_k = 0 while
// the processing-noise term is present.
AuxiliaryWeights update_auxiliary(const ChannelSet& channels, const SolutionState& solution,
                                  const SystemConfig& config, bool paper_literal = false);

// sum_k [ ln(gamma T_k + 1 + c_k) - s_k (gamma I_k + 1 + c_k) + ln s_k + 1 ]
// with T_k the total received beam power, I_k the interference part and
// c_k the processing-noise term. With weights from update_auxiliary this
// equals ln2 * sum_rate exactly; for any other positive weights it is a
// lower bound.
double surrogate_value(const ChannelSet& channels, const SolutionState& solution,
                       const SystemConfig& config, const RVec& weights);

// (N+1) x M stack [h_k^H ; diag(g_k^H) G]. Row i > 0 is element i's
// contribution, so |a_k f|^2 = u^H (B f)(B f)^H u for u = [1; conj(phi)].
CMat star_stack(const ChannelSet& channels, int user_k);

// B_k (sum_j f_j f_j^H) B_k^H, or with user k's own beam excluded. PSD.
CMat star_quadratic(const ChannelSet& channels, const BeamformerSet& beams, int user_k,
                    bool exclude_self);

// Beamformer subproblem: K lifted PSD variables F_k, per-user logarithm
// terms over the total received power, the weighted interference penalty,
// per-user EH rows and the total power row. The EH threshold is relaxed by
// a 1e-6 relative margin so the feasible set keeps a strict interior; the
// power-split update restores the threshold exactly. The rank-1 condition
// is dropped (that is the relaxation). An optional warm start is forwarded
// to the solver, which treats it as advisory.
conic::ConicProblem build_p2(const ChannelSet& channels, const StarCoefficients& star,
                             const PowerSplit& ps, const AuxiliaryWeights& aux,
                             const SystemConfig& config,
                             const LiftedBeamformers* warm = nullptr);

struct P3Options {
  StarMode mode = StarMode::Free;
  // Pins the first diagonal to 1/2 instead of 1 and scales the coupling
  // rows to match, a printed-variant comparison knob. Recovery normalizes
  // candidates by their first entry, so physical extraction is unaffected.
  bool first_diag_half = false;
  const LiftedStarMatrices* warm = nullptr;
};

// Coefficient subproblem over the lifted matrices. Each user's rows act on
// the matrix of their own side; in ReflectOnly mode the transmission-side
// contributions are constants (direct link only) and fold into the
// objective or degenerate rows.
conic::ConicProblem build_p3(const ChannelSet& channels, const BeamformerSet& beams,
                             const PowerSplit& ps, const AuxiliaryWeights& aux,
                             const SystemConfig& config, const P3Options& options = {});

LiftedBeamformers lifted_from_result(const conic::SolverResult& result);

// Pairs the solved matrices back up; in ReflectOnly mode the transmission
// matrix is synthesized as the dark-surface lifting (only the [0,0] entry
// set) so downstream recovery sees a consistent shape.
LiftedStarMatrices star_from_result(const conic::SolverResult& result, StarMode mode);

}  // namespace starswipt::sdr
