#include "starswipt/model.hpp"

#include <cmath>
#include <stdexcept>

namespace starswipt {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

double wrap_theta(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t <= 0.0) t += kTwoPi;
  return t;
}

CVec StarCoefficients::phi(Side side) const {
  const RVec& beta = side == Side::Reflect ? beta_r : beta_t;
  const RVec& theta = side == Side::Reflect ? theta_r : theta_t;
  CVec out(beta.size());
  for (int i = 0; i < beta.size(); ++i)
    out(i) = std::sqrt(beta(i)) * std::complex<double>(std::cos(theta(i)), -std::sin(theta(i)));
  return out;
}

CVec StarCoefficients::lifted_v(Side side) const { return phi(side).conjugate(); }

StarCoefficients StarCoefficients::uniform_half(int n) {
  StarCoefficients s;
  s.beta_r = RVec::Constant(n, 0.5);
  s.beta_t = RVec::Constant(n, 0.5);
  s.theta_r = RVec::Constant(n, kTwoPi);
  s.theta_t = RVec::Constant(n, kTwoPi);
  return s;
}

bool FeasibilityReport::all_ok() const {
  if (!power_ok || !coupling_ok || !bounds_ok) return false;
  for (bool ok : eh_ok)
    if (!ok) return false;
  return true;
}

Eigen::RowVectorXcd effective_channel(const ChannelSet& channels, const StarCoefficients& star, int user_k) {
  const int n = static_cast<int>(channels.G.rows());
  if (star.num_elements() != n) throw std::invalid_argument("effective_channel: element count mismatch");
  if (user_k < 0 || user_k >= channels.num_users())
    throw std::invalid_argument("effective_channel: user index out of range");
  if (channels.h[user_k].size() != channels.G.cols() || channels.g[user_k].size() != n)
    throw std::invalid_argument("effective_channel: channel dimension mismatch");
  const CVec phi = star.phi(channels.sides[user_k]);
  return channels.h[user_k].adjoint() + channels.g[user_k].adjoint() * phi.asDiagonal() * channels.G;
}

SinrRate sinr_and_rate(const ChannelSet& channels, const SolutionState& solution,
                       const SystemConfig& config, int user_k) {
  const Eigen::RowVectorXcd a = effective_channel(channels, solution.star, user_k);
  const double gamma = 1.0 / config.sigma2_w();
  const double delta2 = config.delta2_w();
  const double rho = solution.ps.rho(user_k);

  double signal = 0.0, interference = 0.0;
  for (int j = 0; j < solution.beams.num_users(); ++j) {
    const double p = std::norm((a * solution.beams.f.col(j)).value());
    if (j == user_k)
      signal = p;
    else
      interference += p;
  }

  SinrRate out;
  if (rho <= 0.0 && delta2 > 0.0) {
    out.sinr = 0.0;  // all received power diverted to EH, ID sees only circuit noise
  } else {
    double denom = gamma * interference + 1.0;
    if (delta2 > 0.0) denom += delta2 * gamma / rho;
    out.sinr = gamma * signal / denom;
  }
  out.rate = std::log2(1.0 + out.sinr);
  return out;
}

double sum_rate(const ChannelSet& channels, const SolutionState& solution, const SystemConfig& config) {
  double total = 0.0;
  for (int k = 0; k < channels.num_users(); ++k)
    total += sinr_and_rate(channels, solution, config, k).rate;
  return total;
}

double harvested_energy(const ChannelSet& channels, const SolutionState& solution,
                        const SystemConfig& config, int user_k) {
  const Eigen::RowVectorXcd a = effective_channel(channels, solution.star, user_k);
  double received = 0.0;
  for (int j = 0; j < solution.beams.num_users(); ++j)
    received += std::norm((a * solution.beams.f.col(j)).value());
  return config.eta * (1.0 - solution.ps.rho(user_k)) * (received + config.sigma2_w());
}

FeasibilityReport check_feasibility(const ChannelSet& channels, const SolutionState& solution,
                                    const SystemConfig& config, double tol) {
  FeasibilityReport rep;
  double worst = 0.0;

  const double p_max = config.p_max_w();
  const double power = solution.beams.total_power();
  rep.power_ok = power <= p_max * (1.0 + tol);
  worst = std::max(worst, (power - p_max) / p_max);

  const double e_min = config.e_min_w();
  rep.eh_ok.resize(channels.num_users());
  for (int k = 0; k < channels.num_users(); ++k) {
    const double e = harvested_energy(channels, solution, config, k);
    rep.eh_ok[k] = e >= e_min * (1.0 - tol);
    if (e_min > 0.0) worst = std::max(worst, (e_min - e) / e_min);
  }

  rep.coupling_ok = true;
  rep.bounds_ok = true;
  for (int i = 0; i < solution.star.num_elements(); ++i) {
    const double br = solution.star.beta_r(i), bt = solution.star.beta_t(i);
    const double gap = std::abs(br + bt - 1.0);
    if (gap > tol) rep.coupling_ok = false;
    worst = std::max(worst, gap);
    const double oob = std::max({-br, br - 1.0, -bt, bt - 1.0, 0.0});
    if (oob > tol) rep.bounds_ok = false;
    worst = std::max(worst, oob);
  }
  for (int k = 0; k < solution.ps.rho.size(); ++k) {
    const double r = solution.ps.rho(k);
    const double oob = std::max({-r, r - 1.0, 0.0});
    if (oob > tol) rep.bounds_ok = false;
    worst = std::max(worst, oob);
  }

  rep.worst_violation = std::max(worst, 0.0);
  return rep;
}

}  // namespace starswipt
