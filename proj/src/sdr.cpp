#include "starswipt/sdr.hpp"

#include <cmath>
#include <stdexcept>

namespace starswipt::sdr {

namespace {

// Relative slack on the EH threshold inside the lifted subproblems. The
// power-split update pins the harvested energy to the threshold exactly, so
// without this margin every later subproblem would start on its own
// boundary; the margin keeps a strict interior and is three orders below
// the feasibility tolerances used downstream.
constexpr double kEhRelax = 1e-6;

// delta2 * gamma / rho, the processing-noise term of the SINR denominator.
double processing_term(const SystemConfig& config, double rho) {
  const double d2g = config.delta2_w() / config.sigma2_w();
  if (d2g == 0.0) return 0.0;
  if (!(rho > 0.0)) throw std::domain_error("sdr: rho must be positive when processing noise is present");
  return d2g / rho;
}

// |a_k f_j|^2 for all j, plus the total and the interference part.
struct ReceivedPowers {
  RVec p;  // per beam
  double total = 0.0;
  double interference = 0.0;
};

ReceivedPowers received_powers(const ChannelSet& channels, const SolutionState& solution, int user_k) {
  const Eigen::RowVectorXcd a = effective_channel(channels, solution.star, user_k);
  ReceivedPowers out;
  const int kk = solution.beams.num_users();
  out.p.resize(kk);
  for (int j = 0; j < kk; ++j) {
    out.p(j) = std::norm((a * solution.beams.f.col(j)).value());
    out.total += out.p(j);
    if (j != user_k) out.interference += out.p(j);
  }
  return out;
}

}  // namespace

AuxiliaryWeights update_auxiliary(const ChannelSet& channels, const SolutionState& solution,
                                  const SystemConfig& config, bool paper_literal) {
  const int kk = channels.num_users();
  const double gamma = 1.0 / config.sigma2_w();
  AuxiliaryWeights aux;
  aux.s.resize(kk);
  for (int k = 0; k < kk; ++k) {
    const ReceivedPowers rp = received_powers(channels, solution, k);
    double x;
    if (paper_literal) {
      const double rho = solution.ps.rho(k);
      if (!(rho > 0.0)) throw std::domain_error("sdr: rho must be positive for the literal weight formula");
      x = gamma * rp.interference + (config.delta2_w() * gamma + 1.0) / rho + 1.0;
    } else {
      x = gamma * rp.interference + 1.0 + processing_term(config, solution.ps.rho(k));
    }
    if (!(x > 0.0) || !std::isfinite(x)) throw std::domain_error("sdr: nonpositive surrogate denominator");
    aux.s(k) = 1.0 / x;
  }
  aux.q = aux.s;
  return aux;
}

double surrogate_value(const ChannelSet& channels, const SolutionState& solution,
                       const SystemConfig& config, const RVec& weights) {
  const double gamma = 1.0 / config.sigma2_w();
  double value = 0.0;
  for (int k = 0; k < channels.num_users(); ++k) {
    const ReceivedPowers rp = received_powers(channels, solution, k);
    const double c = processing_term(config, solution.ps.rho(k));
    const double w = weights(k);
    value += std::log(gamma * rp.total + 1.0 + c) - w * (gamma * rp.interference + 1.0 + c) +
             std::log(w) + 1.0;
  }
  return value;
}

CMat star_stack(const ChannelSet& channels, int user_k) {
  const int n = static_cast<int>(channels.G.rows());
  const int m = static_cast<int>(channels.G.cols());
  CMat b(n + 1, m);
  b.row(0) = channels.h[user_k].adjoint();
  b.bottomRows(n) = channels.g[user_k].conjugate().asDiagonal() * channels.G;
  return b;
}

CMat star_quadratic(const ChannelSet& channels, const BeamformerSet& beams, int user_k,
                    bool exclude_self) {
  const CMat b = star_stack(channels, user_k);
  CMat gram = beams.f * beams.f.adjoint();
  if (exclude_self) gram -= beams.f.col(user_k) * beams.f.col(user_k).adjoint();
  const CMat d = b * gram * b.adjoint();
  return 0.5 * (d + d.adjoint());
}

conic::ConicProblem build_p2(const ChannelSet& channels, const StarCoefficients& star,
                             const PowerSplit& ps, const AuxiliaryWeights& aux,
                             const SystemConfig& config, const LiftedBeamformers* warm) {
  const int kk = channels.num_users();
  const int m = static_cast<int>(channels.G.cols());
  const double gamma = 1.0 / config.sigma2_w();
  const double e_min = config.e_min_w() * (1.0 - kEhRelax);

  conic::ConicProblem p;
  for (int k = 0; k < kk; ++k) p.add_variable(m);

  conic::AffineExpr power;
  power.constant = config.p_max_w();
  for (int j = 0; j < kk; ++j) power.add(j, -CMat::Identity(m, m));
  p.constraints.push_back({std::move(power), conic::Relation::Ge});

  for (int k = 0; k < kk; ++k) {
    const Eigen::RowVectorXcd a = effective_channel(channels, star, k);
    const CMat h_gram = a.adjoint() * a;
    const double c = processing_term(config, ps.rho(k));
    const double s = aux.s(k);

    conic::AffineExpr log_arg;
    log_arg.constant = 1.0 + c;
    for (int j = 0; j < kk; ++j) log_arg.add(j, gamma * h_gram);
    p.log_terms.push_back(std::move(log_arg));

    for (int j = 0; j < kk; ++j)
      if (j != k) p.linear_objective.add(j, -(s * gamma) * h_gram);
    p.linear_objective.constant += -s * (1.0 + c) + std::log(s) + 1.0;

    const double w = config.eta * (1.0 - ps.rho(k));
    conic::AffineExpr eh;
    eh.constant = w * config.sigma2_w() - e_min;
    for (int j = 0; j < kk; ++j) eh.add(j, w * h_gram);
    p.constraints.push_back({std::move(eh), conic::Relation::Ge});
  }

  if (warm && static_cast<int>(warm->F.size()) == kk) p.warm_start = warm->F;
  return p;
}

conic::ConicProblem build_p3(const ChannelSet& channels, const BeamformerSet& beams,
                             const PowerSplit& ps, const AuxiliaryWeights& aux,
                             const SystemConfig& config, const P3Options& options) {
  const int kk = channels.num_users();
  const int n = static_cast<int>(channels.G.rows());
  const int dim = n + 1;
  const double gamma = 1.0 / config.sigma2_w();
  const double e_min = config.e_min_w() * (1.0 - kEhRelax);
  const double d1 = options.first_diag_half ? 0.5 : 1.0;

  conic::ConicProblem p;
  const int vr = p.add_variable(dim);
  const int vt = options.mode == StarMode::ReflectOnly ? -1 : p.add_variable(dim);
  auto var_of = [&](int k) { return channels.sides[k] == Side::Reflect ? vr : vt; };

  auto diag_unit = [dim](int i) {
    CMat e = CMat::Zero(dim, dim);
    e(i, i) = 1.0;
    return e;
  };

  for (int k = 0; k < kk; ++k) {
    const CMat d_all = star_quadratic(channels, beams, k, false);
    const CMat d_bar = star_quadratic(channels, beams, k, true);
    const double c = processing_term(config, ps.rho(k));
    const double q = aux.q(k);
    const double w = config.eta * (1.0 - ps.rho(k));
    const int var = var_of(k);

    conic::AffineExpr log_arg;
    log_arg.constant = 1.0 + c;
    conic::AffineExpr eh;
    eh.constant = w * config.sigma2_w() - e_min;
    if (var >= 0) {
      log_arg.add(var, gamma * d_all);
      p.linear_objective.add(var, -(q * gamma) * d_bar);
      eh.add(var, w * d_all);
    } else {
      // Dark transmission side: only the [0,0] (direct link) entry survives.
      log_arg.constant += gamma * d1 * d_all(0, 0).real();
      p.linear_objective.constant += -(q * gamma) * d1 * d_bar(0, 0).real();
      eh.constant += w * d1 * d_all(0, 0).real();
    }
    p.log_terms.push_back(std::move(log_arg));
    p.linear_objective.constant += -q * (1.0 + c) + std::log(q) + 1.0;
    p.constraints.push_back({std::move(eh), conic::Relation::Ge});
  }

  for (int var : {vr, vt}) {
    if (var < 0) continue;
    conic::AffineExpr norm;
    norm.constant = -d1;
    norm.add(var, diag_unit(0));
    p.constraints.push_back({std::move(norm), conic::Relation::Eq});
  }
  for (int i = 1; i <= n; ++i) {
    conic::AffineExpr row;
    switch (options.mode) {
      case StarMode::Free:
        row.constant = -d1;
        row.add(vr, diag_unit(i)).add(vt, diag_unit(i));
        break;
      case StarMode::EqualHalf:
        // Both amplitudes pinned at 1/2; the cross-side coupling is implied.
        row.constant = -0.5 * d1;
        row.add(vr, diag_unit(i));
        p.constraints.push_back({row, conic::Relation::Eq});
        row.terms.clear();
        row.add(vt, diag_unit(i));
        break;
      case StarMode::ReflectOnly:
        row.constant = -d1;
        row.add(vr, diag_unit(i));
        break;
    }
    p.constraints.push_back({std::move(row), conic::Relation::Eq});
  }

  if (options.warm) {
    p.warm_start = {options.warm->V_r};
    if (vt >= 0) p.warm_start.push_back(options.warm->V_t);
  }
  return p;
}

LiftedBeamformers lifted_from_result(const conic::SolverResult& result) {
  return {result.values};
}

LiftedStarMatrices star_from_result(const conic::SolverResult& result, StarMode mode) {
  LiftedStarMatrices out;
  out.V_r = result.values.at(0);
  if (mode == StarMode::ReflectOnly) {
    out.V_t = CMat::Zero(out.V_r.rows(), out.V_r.cols());
    out.V_t(0, 0) = out.V_r(0, 0);
  } else {
    out.V_t = result.values.at(1);
  }
  return out;
}

}  // namespace starswipt::sdr
