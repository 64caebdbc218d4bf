#include "starswipt/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "starswipt/rng.hpp"

namespace starswipt::recovery {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Draw from CN(0, C) given C's eigendecomposition; negative eigenvalues
// from roundoff are clipped. Consumes one cnormal per dimension.
CVec gaussian_from_covariance(const Eigen::SelfAdjointEigenSolver<CMat>& eig, RngStream& rng) {
  const RVec& lam = eig.eigenvalues();
  CVec w(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    w(i) = rng.cnormal() * std::sqrt(std::max(lam(i), 0.0));
  return eig.eigenvectors() * w;
}

// Worst relative EH shortfall over users, <= 0 when all thresholds hold.
double worst_eh_deficit(const ChannelSet& channels, const SolutionState& state,
                        const SystemConfig& config) {
  const double e_min = config.e_min_w();
  if (e_min <= 0.0) return 0.0;
  double worst = -kInf;
  for (int k = 0; k < channels.num_users(); ++k) {
    const double e = harvested_energy(channels, state, config, k);
    worst = std::max(worst, (e_min - e) / e_min);
  }
  return worst;
}

void require_trials(const RandomizationOptions& opts) {
  if (opts.trials < 1) throw std::invalid_argument("RandomizationOptions: trials must be >= 1");
}

}  // namespace

BeamformerSet recover_beamformers(const sdr::LiftedBeamformers& lifted, const ChannelSet& channels,
                                  const StarCoefficients& star, const PowerSplit& ps,
                                  const SystemConfig& config, const RandomizationOptions& opts) {
  require_trials(opts);
  const int users = static_cast<int>(lifted.F.size());
  const int m = static_cast<int>(lifted.F.front().rows());

  std::vector<Eigen::SelfAdjointEigenSolver<CMat>> eigs;
  eigs.reserve(users);
  std::vector<bool> direct(users, false);
  bool all_direct = true;
  BeamformerSet eigen_set;
  eigen_set.f.resize(m, users);
  for (int k = 0; k < users; ++k) {
    eigs.emplace_back(lifted.F[k]);
    const RVec& lam = eigs[k].eigenvalues();
    const double lam1 = std::max(lam(m - 1), 0.0);
    const double lam2 = m > 1 ? std::max(lam(m - 2), 0.0) : 0.0;
    direct[k] = lam2 <= opts.rank_tol * lam1;
    all_direct = all_direct && direct[k];
    eigen_set.f.col(k) = std::sqrt(lam1) * eigs[k].eigenvectors().col(m - 1);
  }
  if (all_direct) return eigen_set;

  RngStream rng(opts.seed);
  const double p_max = config.p_max_w();
  BeamformerSet best, least_bad;
  double best_rate = -kInf, least_deficit = kInf;
  bool have_feasible = false;
  for (int t = 0; t < opts.trials; ++t) {
    BeamformerSet cand = eigen_set;
    for (int k = 0; k < users; ++k) {
      if (direct[k]) continue;
      const CVec z = gaussian_from_covariance(eigs[k], rng);
      const double znorm = z.norm();
      const double tr = std::max(lifted.F[k].trace().real(), 0.0);
      if (znorm > 0.0) cand.f.col(k) = z * (std::sqrt(tr) / znorm);
    }
    const double power = cand.total_power();
    // The hair of margin keeps the rescaled power strictly under budget
    // through roundoff.
    if (power > p_max) cand.f *= std::sqrt(p_max / power) * (1.0 - 1e-14);

    const SolutionState state{cand, star, ps};
    const double deficit = worst_eh_deficit(channels, state, config);
    if (deficit <= opts.feasibility_tol) {
      const double rate = sum_rate(channels, state, config);
      if (!have_feasible || rate > best_rate) {
        best_rate = rate;
        best = std::move(cand);
        have_feasible = true;
      }
    } else if (deficit < least_deficit) {
      least_deficit = deficit;
      least_bad = std::move(cand);
    }
  }
  if (have_feasible) return best;
  throw BeamformerRecoveryError(
      "beamformer randomization found no EH-feasible candidate (best relative shortfall " +
          std::to_string(least_deficit) + ")",
      least_bad);
}

StarCoefficients recover_star_coefficients(const sdr::LiftedStarMatrices& lifted,
                                           const ChannelSet& channels, const BeamformerSet& beams,
                                           const PowerSplit& ps, const SystemConfig& config,
                                           const RandomizationOptions& opts) {
  require_trials(opts);
  const int n = static_cast<int>(lifted.V_r.rows()) - 1;
  const Eigen::SelfAdjointEigenSolver<CMat> eig_r(lifted.V_r), eig_t(lifted.V_t);

  // Global phase is anchored on the homogenization entry; a vanishing
  // anchor degrades to an amplitude-only normalization rather than blowing
  // up (such a candidate just scores poorly).
  const auto normalize = [](const CVec& v) {
    const double norm = v.norm();
    if (std::abs(v(0)) > 1e-12 * norm) return CVec(v / v(0));
    return norm > 0.0 ? CVec(v / norm) : v;
  };

  RngStream rng(opts.seed);
  StarCoefficients best, least_bad;
  double best_rate = -kInf, least_deficit = kInf;
  bool have_feasible = false;
  for (int t = 0; t < opts.trials; ++t) {
    const CVec vr = normalize(t == 0 ? CVec(eig_r.eigenvectors().col(n))
                                     : gaussian_from_covariance(eig_r, rng));
    const CVec vt = normalize(t == 0 ? CVec(eig_t.eigenvectors().col(n))
                                     : gaussian_from_covariance(eig_t, rng));
    StarCoefficients cand;
    cand.beta_r.resize(n);
    cand.beta_t.resize(n);
    cand.theta_r.resize(n);
    cand.theta_t.resize(n);
    for (int e = 0; e < n; ++e) {
      const std::complex<double> zr = vr(e + 1), zt = vt(e + 1);
      const double br = opts.phase_only ? 1.0 : std::norm(zr);
      const double bt = opts.phase_only ? 1.0 : std::norm(zt);
      const double s = br + bt;
      cand.beta_r(e) = s > 0.0 ? br / s : 0.5;
      cand.beta_t(e) = 1.0 - cand.beta_r(e);
      cand.theta_r(e) = wrap_theta(std::arg(zr));
      cand.theta_t(e) = wrap_theta(std::arg(zt));
    }

    const SolutionState state{beams, cand, ps};
    const double deficit = worst_eh_deficit(channels, state, config);
    if (deficit <= opts.feasibility_tol) {
      const double rate = sum_rate(channels, state, config);
      if (!have_feasible || rate > best_rate) {
        best_rate = rate;
        best = std::move(cand);
        have_feasible = true;
      }
    } else if (deficit < least_deficit) {
      least_deficit = deficit;
      least_bad = std::move(cand);
    }
  }
  if (have_feasible) return best;
  throw StarRecoveryError(
      "coefficient randomization found no EH-feasible candidate (best relative shortfall " +
          std::to_string(least_deficit) + ")",
      least_bad);
}

bool PowerSplitResult::all_feasible() const {
  return std::all_of(eh_feasible.begin(), eh_feasible.end(), [](bool b) { return b; });
}

PowerSplitResult optimal_power_split(const ChannelSet& channels, const StarCoefficients& star,
                                     const BeamformerSet& beams, const SystemConfig& config) {
  const int users = channels.num_users();
  PowerSplitResult out;
  out.ps.rho.resize(users);
  out.eh_feasible.assign(users, true);
  const double e_min = config.e_min_w();
  for (int k = 0; k < users; ++k) {
    if (e_min <= 0.0) {
      out.ps.rho(k) = 1.0;
      continue;
    }
    const Eigen::RowVectorXcd a = effective_channel(channels, star, k);
    double total = config.sigma2_w();
    for (int j = 0; j < beams.num_users(); ++j) total += std::norm((a * beams.f.col(j)).value());
    const double cap = config.eta * total;  // harvested energy at rho = 0
    if (cap <= 0.0) {
      out.ps.rho(k) = 0.0;
      out.eh_feasible[k] = false;
      continue;
    }
    const double raw = 1.0 - e_min / cap;
    out.ps.rho(k) = std::clamp(raw, 0.0, 1.0);
    if (raw < 0.0) out.eh_feasible[k] = false;
  }
  return out;
}

}  // namespace starswipt::recovery
