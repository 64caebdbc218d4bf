#pragma once

#include <optional>
#include <string>
#include <vector>

#include "starswipt/conic.hpp"
#include "starswipt/model.hpp"
#include "starswipt/recovery.hpp"
#include "starswipt/rng.hpp"
#include "starswipt/sdr.hpp"

namespace starswipt::ao {

struct AoOptions {
  // Relative sum-rate change between outer iterations that counts as
  // converged. Whichever of epsilon and max_outer triggers first stops the
  // loop; the report status says which.
  double epsilon = 1e-3;
  int max_outer = 30;
  recovery::RandomizationOptions randomization;
  conic::SolverOptions solver;
  // Surface treatment of the coefficient subproblem; the comparison schemes
  // plug in their restricted modes here.
  sdr::StarMode star_mode = sdr::StarMode::Free;
  bool optimize_star = true;         // false skips the surface stage entirely
  bool paper_literal_aux = false;    // see sdr::update_auxiliary
  bool phase_only_recovery = false;  // surface recovery keeps phases only
  bool first_diag_half = false;      // see sdr::P3Options
  // Pin rho = 1/2 for every user and skip the split update, an alternate
  // reading of the equal-split comparison. EH feasibility is then only held
  // to the randomization tolerance since the exact repair is disabled.
  bool freeze_rho_half = false;
  bool verbose = false;  // one stderr line per stage
};

enum class AoStatus { Converged, IterationLimit, Degraded, Infeasible };

const char* to_string(AoStatus status);

struct StageRecord {
  int iteration = 0;       // 1-based outer iteration
  const char* stage = "";  // "beams" | "surface" | "split"
  // The split stage has no solver behind it; its record keeps Optimal.
  conic::SolveStatus solver_status = conic::SolveStatus::Optimal;
  bool accepted = false;  // block update adopted
  double objective = 0.0;  // sum rate after the stage decision, bits/s/Hz
  // Worst lambda2/lambda1 across the lifted blocks of the relaxed solution,
  // before recovery; near zero certifies an essentially rank-1 optimum.
  // Zero for the split stage and for failed solves.
  double rank_ratio = 0.0;
  double wall_ms = 0.0;
  std::string note;  // stall or rejection reason, empty otherwise
};

struct SolveReport {
  AoStatus status = AoStatus::Infeasible;
  // True sum rate per outer iteration, bits/s/Hz; entry 0 is the
  // initialization. Non-decreasing within 1e-6 relative slack: a stage is
  // adopted only when the rate it yields (with the split re-optimized) does
  // not fall below the incumbent.
  std::vector<double> objective_trace;
  SolutionState solution;  // best feasible iterate seen
  double sum_rate = 0.0;   // bits/s/Hz, of `solution`
  int iterations = 0;      // completed outer iterations
  std::vector<StageRecord> stages;
  FeasibilityReport feasibility;  // of `solution`, tolerance 1e-6
  // Certified relaxation bounds, bits/s/Hz: each subproblem is re-solved at
  // the returned solution with its auxiliaries canonical there, and the
  // solver objective plus its duality gap is reported. The surrogate equals
  // ln 2 times the sum rate at that point, so sum_rate never exceeds these.
  // Absent when the certifying solve fails.
  std::optional<double> beam_bound;
  std::optional<double> surface_bound;
  double wall_ms = 0.0;
};

// Uniform random phases on (0, 2*pi] (reflection side first), the half
// amplitude split, matched filters to the resulting effective channels with
// the budget spread equally across users, and the closed-form power split
// (1/2 for every user when the EH threshold is zero, since the closed form
// degenerates to rho = 1 there).
SolutionState initialize_solution(const ChannelSet& channels, const SystemConfig& config,
                                  RngStream& rng);

// Alternating optimization: per outer iteration, refresh the surrogate
// weights, solve and round the beamformer subproblem, refresh, solve and
// round the coefficient subproblem, then re-optimize the power splits in
// closed form. A block update is kept only if the true sum rate does not
// decrease, so the trace ascends; subproblem failures retain the previous
// block and two consecutive failures end the run as Degraded. The rng
// stream drives the initialization and the per-stage randomization seeds.
SolveReport run_ao(const ChannelSet& channels, const SystemConfig& config, const AoOptions& opts,
                   RngStream& rng);

}  // namespace starswipt::ao
