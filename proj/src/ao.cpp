#include "starswipt/ao.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <utility>

namespace starswipt::ao {
namespace {

constexpr double kLn2 = 0.6931471805599453;

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Matched filters to the effective channels under the given surface, with
// the power budget split equally across users, plus the closed-form power
// split. A dead effective channel (possible only with degenerate inputs)
// gets a flat beam so the power accounting stays exact.
SolutionState with_matched_filters(const ChannelSet& channels, const SystemConfig& config,
                                   StarCoefficients star) {
  SolutionState state;
  state.star = std::move(star);
  const int users = channels.num_users();
  const int m = static_cast<int>(channels.G.cols());
  state.beams.f.resize(m, users);
  const double per_user = config.p_max_w() / users;
  for (int k = 0; k < users; ++k) {
    const Eigen::RowVectorXcd a = effective_channel(channels, state.star, k);
    const double norm = a.norm();
    if (norm > 0.0)
      state.beams.f.col(k) = (std::sqrt(per_user) / norm) * a.adjoint();
    else
      state.beams.f.col(k) = CVec::Constant(m, std::sqrt(per_user / m));
  }
  state.ps = recovery::optimal_power_split(channels, state.star, state.beams, config).ps;
  if (config.e_min_w() == 0.0) state.ps.rho.setConstant(0.5);
  return state;
}

// Half amplitudes with random phases. Consumes exactly one draw from the
// caller's stream regardless of n, so everything drawn afterwards (stage
// randomization seeds in particular) is independent of the element count.
StarCoefficients random_phase_half_star(int n, RngStream& rng) {
  RngStream phases(rng.engine()());
  StarCoefficients star = StarCoefficients::uniform_half(n);
  for (int e = 0; e < n; ++e) star.theta_r(e) = phases.phase();
  for (int e = 0; e < n; ++e) star.theta_t(e) = phases.phase();
  return star;
}

// lambda2/lambda1 of one PSD block, zero for degenerate blocks.
double rank_ratio(const CMat& b) {
  if (b.rows() < 2) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(b, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (!(ev(ev.size() - 1) > 0.0)) return 0.0;
  return std::max(0.0, ev(ev.size() - 2)) / ev(ev.size() - 1);
}

void log_stage(const StageRecord& rec) {
  std::fprintf(stderr, "[ao] iter=%d stage=%s status=%s objective=%.6f accepted=%d ms=%.1f%s%s\n",
               rec.iteration, rec.stage, conic::to_string(rec.solver_status), rec.objective,
               rec.accepted ? 1 : 0, rec.wall_ms, rec.note.empty() ? "" : " note=",
               rec.note.c_str());
}

}  // namespace

const char* to_string(AoStatus status) {
  switch (status) {
    case AoStatus::Converged: return "converged";
    case AoStatus::IterationLimit: return "iteration-limit";
    case AoStatus::Degraded: return "degraded";
    case AoStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

SolutionState initialize_solution(const ChannelSet& channels, const SystemConfig& config,
                                  RngStream& rng) {
  return with_matched_filters(channels, config, random_phase_half_star(config.n, rng));
}

SolveReport run_ao(const ChannelSet& channels, const SystemConfig& config, const AoOptions& opts,
                   RngStream& rng) {
  const auto run_start = Clock::now();
  SolveReport report;

  StarCoefficients star0 = random_phase_half_star(config.n, rng);
  if (opts.star_mode == sdr::StarMode::ReflectOnly) {
    star0.beta_r.setOnes();
    star0.beta_t.setZero();
  }
  SolutionState state = with_matched_filters(channels, config, std::move(star0));
  if (opts.freeze_rho_half) state.ps.rho.setConstant(0.5);

  double rate = sum_rate(channels, state, config);
  report.objective_trace.push_back(rate);
  report.solution = state;
  report.sum_rate = rate;

  const FeasibilityReport init_check = check_feasibility(channels, state, config, 1e-6);
  if (!init_check.all_ok()) {
    report.status = AoStatus::Infeasible;
    report.feasibility = init_check;
    report.wall_ms = ms_since(run_start);
    return report;
  }

  // Recovery acceptance tolerance; with the frozen split this is the only
  // EH guard, otherwise the closed-form repair takes over.
  int stalls = 0;
  bool degraded = false;
  report.status = AoStatus::IterationLimit;
  for (int iter = 1; iter <= opts.max_outer; ++iter) {
    // Beamformer block.
    {
      const auto t = Clock::now();
      StageRecord rec;
      rec.iteration = iter;
      rec.stage = "beams";
      const sdr::AuxiliaryWeights aux =
          sdr::update_auxiliary(channels, state, config, opts.paper_literal_aux);
      const conic::SolverResult r =
          conic::solve_conic(sdr::build_p2(channels, state.star, state.ps, aux, config),
                             opts.solver);
      rec.solver_status = r.status;
      bool failed = !r.ok();
      if (failed) {
        rec.note = r.message.empty() ? "subproblem not solved" : r.message;
      } else {
        recovery::RandomizationOptions ropts = opts.randomization;
        ropts.seed = rng.engine()();
        try {
          const sdr::LiftedBeamformers lifted = sdr::lifted_from_result(r);
          for (const CMat& f : lifted.F)
            rec.rank_ratio = std::max(rec.rank_ratio, rank_ratio(f));
          const BeamformerSet cand = recovery::recover_beamformers(
              lifted, channels, state.star, state.ps, config, ropts);
          PowerSplit cand_ps = state.ps;
          bool split_ok = true;
          if (!opts.freeze_rho_half) {
            const auto split = recovery::optimal_power_split(channels, state.star, cand, config);
            split_ok = split.all_feasible();
            cand_ps = split.ps;
          }
          if (!split_ok) {
            rec.note = "candidate split infeasible, block retained";
          } else {
            const double cand_rate = sum_rate(channels, {cand, state.star, cand_ps}, config);
            if (cand_rate >= rate * (1.0 - 1e-12)) {
              state.beams = cand;
              state.ps = cand_ps;
              rate = cand_rate;
              rec.accepted = true;
            } else {
              rec.note = "candidate rate below incumbent, block retained";
            }
          }
        } catch (const recovery::RecoveryError& err) {
          failed = true;
          rec.note = err.what();
        }
      }
      stalls = failed ? stalls + 1 : 0;
      rec.objective = rate;
      rec.wall_ms = ms_since(t);
      if (opts.verbose) log_stage(rec);
      report.stages.push_back(std::move(rec));
    }
    degraded = stalls >= 2;

    // Surface block.
    if (!degraded && opts.optimize_star) {
      const auto t = Clock::now();
      StageRecord rec;
      rec.iteration = iter;
      rec.stage = "surface";
      const sdr::AuxiliaryWeights aux =
          sdr::update_auxiliary(channels, state, config, opts.paper_literal_aux);
      sdr::P3Options p3opts;
      p3opts.mode = opts.star_mode;
      p3opts.first_diag_half = opts.first_diag_half;
      const conic::SolverResult r = conic::solve_conic(
          sdr::build_p3(channels, state.beams, state.ps, aux, config, p3opts), opts.solver);
      rec.solver_status = r.status;
      bool failed = !r.ok();
      if (failed) {
        rec.note = r.message.empty() ? "subproblem not solved" : r.message;
      } else {
        recovery::RandomizationOptions ropts = opts.randomization;
        ropts.seed = rng.engine()();
        ropts.phase_only = opts.phase_only_recovery;
        try {
          const sdr::LiftedStarMatrices lifted = sdr::star_from_result(r, opts.star_mode);
          rec.rank_ratio = std::max(rank_ratio(lifted.V_r), rank_ratio(lifted.V_t));
          const StarCoefficients cand = recovery::recover_star_coefficients(
              lifted, channels, state.beams, state.ps, config, ropts);
          PowerSplit cand_ps = state.ps;
          bool split_ok = true;
          if (!opts.freeze_rho_half) {
            const auto split = recovery::optimal_power_split(channels, cand, state.beams, config);
            split_ok = split.all_feasible();
            cand_ps = split.ps;
          }
          if (!split_ok) {
            rec.note = "candidate split infeasible, block retained";
          } else {
            const double cand_rate = sum_rate(channels, {state.beams, cand, cand_ps}, config);
            if (cand_rate >= rate * (1.0 - 1e-12)) {
              state.star = cand;
              state.ps = cand_ps;
              rate = cand_rate;
              rec.accepted = true;
            } else {
              rec.note = "candidate rate below incumbent, block retained";
            }
          }
        } catch (const recovery::RecoveryError& err) {
          failed = true;
          rec.note = err.what();
        }
      }
      stalls = failed ? stalls + 1 : 0;
      rec.objective = rate;
      rec.wall_ms = ms_since(t);
      if (opts.verbose) log_stage(rec);
      report.stages.push_back(std::move(rec));
      degraded = stalls >= 2;
    }

    // Power-split block (closed form, cannot fail from a feasible iterate).
    if (!degraded && !opts.freeze_rho_half) {
      const auto t = Clock::now();
      StageRecord rec;
      rec.iteration = iter;
      rec.stage = "split";
      const auto split = recovery::optimal_power_split(channels, state.star, state.beams, config);
      if (split.all_feasible()) {
        state.ps = split.ps;
        rate = sum_rate(channels, state, config);
        rec.accepted = true;
      } else {
        rec.note = "split infeasible, ratios retained";
      }
      rec.objective = rate;
      rec.wall_ms = ms_since(t);
      if (opts.verbose) log_stage(rec);
      report.stages.push_back(std::move(rec));
    }

    report.objective_trace.push_back(rate);
    report.iterations = iter;
    if (rate > report.sum_rate) {
      report.sum_rate = rate;
      report.solution = state;
    }
    if (degraded) {
      report.status = AoStatus::Degraded;
      break;
    }
    const double prev = report.objective_trace[report.objective_trace.size() - 2];
    if (std::abs(rate - prev) / std::max(prev, 1e-12) <= opts.epsilon) {
      report.status = AoStatus::Converged;
      break;
    }
  }

  // Certify relaxation bounds at the returned solution. With the auxiliaries
  // canonical there, each subproblem's surrogate equals ln 2 times the sum
  // rate at that point, so the solver optimum plus its duality gap is a true
  // upper bound on the achieved rate.
  {
    const sdr::AuxiliaryWeights aux =
        sdr::update_auxiliary(channels, report.solution, config, opts.paper_literal_aux);
    const conic::SolverResult rb = conic::solve_conic(
        sdr::build_p2(channels, report.solution.star, report.solution.ps, aux, config),
        opts.solver);
    if (rb.ok()) report.beam_bound = (rb.objective + rb.residuals.gap_estimate) / kLn2;
    if (opts.optimize_star) {
      sdr::P3Options p3opts;
      p3opts.mode = opts.star_mode;
      p3opts.first_diag_half = opts.first_diag_half;
      const conic::SolverResult rs = conic::solve_conic(
          sdr::build_p3(channels, report.solution.beams, report.solution.ps, aux, config, p3opts),
          opts.solver);
      if (rs.ok()) report.surface_bound = (rs.objective + rs.residuals.gap_estimate) / kLn2;
    }
  }

  report.feasibility = check_feasibility(channels, report.solution, config, 1e-6);
  report.wall_ms = ms_since(run_start);
  return report;
}

}  // namespace starswipt::ao
