#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "starswipt/model.hpp"
#include "starswipt/rng.hpp"
#include "starswipt/sdr.hpp"

using namespace starswipt;

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Random feasible iterate: beams at 80% of the budget, random amplitudes
// and phases, power splits strictly inside (0,1).
SolutionState random_solution(const SystemConfig& cfg, RngStream& rng) {
  SolutionState sol;
  sol.beams.f.resize(cfg.m, cfg.k());
  for (int j = 0; j < cfg.k(); ++j)
    for (int i = 0; i < cfg.m; ++i) sol.beams.f(i, j) = rng.cnormal();
  sol.beams.f *= std::sqrt(0.8 * cfg.p_max_w() / sol.beams.f.squaredNorm());
  sol.star.beta_r.resize(cfg.n);
  sol.star.beta_t.resize(cfg.n);
  sol.star.theta_r.resize(cfg.n);
  sol.star.theta_t.resize(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    sol.star.beta_r(i) = rng.uniform();
    sol.star.beta_t(i) = 1.0 - sol.star.beta_r(i);
    sol.star.theta_r(i) = rng.phase();
    sol.star.theta_t(i) = rng.phase();
  }
  sol.ps.rho.resize(cfg.k());
  for (int k = 0; k < cfg.k(); ++k) sol.ps.rho(k) = 0.3 + 0.6 * rng.uniform();
  return sol;
}

double eval_expr(const conic::AffineExpr& e, const std::vector<CMat>& vals) {
  double v = e.constant;
  for (const auto& t : e.terms) v += (t.coeff * vals[t.var]).trace().real();
  return v;
}

// Objective of a built problem at given variable values.
double eval_problem(const conic::ConicProblem& p, const std::vector<CMat>& vals) {
  double v = eval_expr(p.linear_objective, vals);
  for (const auto& lt : p.log_terms) v += std::log(eval_expr(lt, vals));
  return v;
}

std::vector<CMat> lift_beams(const BeamformerSet& beams) {
  std::vector<CMat> f;
  for (int j = 0; j < beams.num_users(); ++j)
    f.push_back(beams.f.col(j) * beams.f.col(j).adjoint());
  return f;
}

std::vector<CMat> lift_star(const StarCoefficients& star) {
  auto lift = [&](Side side) {
    CVec u(star.num_elements() + 1);
    u(0) = 1.0;
    u.tail(star.num_elements()) = star.lifted_v(side);
    return CMat(u * u.adjoint());
  };
  return {lift(Side::Reflect), lift(Side::Transmit)};
}

}  // namespace

TEST_CASE("scalar surrogate brute force: the weight 1/x is optimal") {
  RngStream rng(derive_seed(7, "lemma"));
  for (int trial = 0; trial < 50; ++trial) {
    const double x = 0.01 * std::pow(10000.0, rng.uniform());  // log-uniform in (0.01, 100)
    auto value = [&](double t) { return -t * x + std::log(t) + 1.0; };
    const double t_star = 1.0 / x;
    CHECK(value(t_star) == doctest::Approx(-std::log(x)).epsilon(1e-12));
    // Geometric grid around the analytic optimum never beats it.
    double best_t = 0.0, best = -1e300;
    for (int i = 0; i <= 4000; ++i) {
      const double t = 1e-4 * std::pow(10.0, 8.0 * i / 4000.0);
      if (value(t) > best) {
        best = value(t);
        best_t = t;
      }
    }
    CHECK(best <= value(t_star) + 1e-12);
    CHECK(std::abs(std::log(best_t / t_star)) < 8.0 * kLn2 * 2.303 / 4000.0 + 1e-9);
  }
}

TEST_CASE("auxiliary weights at hand-computed operating points") {
  SystemConfig cfg;
  cfg.m = 1;
  cfg.n = 1;
  cfg.k_r = 1;
  cfg.k_t = 0;
  ChannelSet cs;
  cs.G = CMat::Zero(1, 1);
  cs.h = {CVec::Constant(1, 1.0)};
  cs.g = {CVec::Zero(1)};
  cs.sides = {Side::Reflect};

  SolutionState sol;
  sol.star = StarCoefficients::uniform_half(1);
  sol.beams.f = CMat::Constant(1, 1, 1.0);
  sol.ps.rho = RVec::Constant(1, 0.5);

  // Single user: no interference. Pick delta2 = sigma2 so that
  // delta2 * gamma / rho = 2, giving x = 3.
  cfg.sigma2_dbm = -60.0;
  cfg.delta2_dbm = -60.0;
  auto aux = sdr::update_auxiliary(cs, sol, cfg);
  CHECK(aux.s(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(aux.q(0) == aux.s(0));

  // x = 1 when the processing noise is off: weight 1 and zero correction,
  // so the surrogate equals ln2 times the rate.
  cfg.delta2_dbm = -1000.0;
  aux = sdr::update_auxiliary(cs, sol, cfg);
  CHECK(aux.s(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sdr::surrogate_value(cs, sol, cfg, aux.s) ==
        doctest::Approx(kLn2 * sum_rate(cs, sol, cfg)).epsilon(1e-12));

  // Literal printed formula: x = gamma*I + (delta2*gamma + 1)/rho + 1.
  cfg.delta2_dbm = -60.0;
  aux = sdr::update_auxiliary(cs, sol, cfg, true);
  CHECK(aux.s(0) == doctest::Approx(1.0 / (2.0 * (1.0 + 1.0) + 1.0)).epsilon(1e-12));
}

TEST_CASE("surrogate tightness at canonical weights on random scenes") {
  SystemConfig cfg;
  cfg.m = 3;
  cfg.n = 4;
  cfg.k_r = 2;
  cfg.k_t = 2;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    const ChannelSet cs = build_channels(cfg);
    RngStream rng(derive_seed(seed, "sdr-tight"));
    const SolutionState sol = random_solution(cfg, rng);
    const auto aux = sdr::update_auxiliary(cs, sol, cfg);
    const double lhs = sdr::surrogate_value(cs, sol, cfg, aux.s);
    const double rhs = kLn2 * sum_rate(cs, sol, cfg);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    // Any other positive weight is a strict minorant.
    RVec off = aux.s * 1.3;
    CHECK(sdr::surrogate_value(cs, sol, cfg, off) < rhs);
  }
}

TEST_CASE("beamformer subproblem shape and objective at the incumbent") {
  SystemConfig cfg;
  cfg.m = 2;
  cfg.n = 3;
  cfg.k_r = 1;
  cfg.k_t = 1;
  cfg.seed = 11;
  const ChannelSet cs = build_channels(cfg);
  RngStream rng(derive_seed(11, "sdr-p2"));
  const SolutionState sol = random_solution(cfg, rng);
  const auto aux = sdr::update_auxiliary(cs, sol, cfg);

  const auto p = sdr::build_p2(cs, sol.star, sol.ps, aux, cfg);
  p.validate();
  REQUIRE(p.dims.size() == 2);
  CHECK(p.dims[0] == 2);
  CHECK(p.log_terms.size() == 2);
  REQUIRE(p.constraints.size() == 3);  // power + 2 EH
  CHECK(p.constraints[0].rel == conic::Relation::Ge);

  // At the rank-1 lifting of the incumbent the objective reproduces the
  // surrogate, which in turn is the weighted sum rate.
  const auto vals = lift_beams(sol.beams);
  CHECK(eval_problem(p, vals) == doctest::Approx(kLn2 * sum_rate(cs, sol, cfg)).epsilon(1e-9));

  // Power row evaluates to the leftover budget.
  CHECK(eval_expr(p.constraints[0].expr, vals) ==
        doctest::Approx(cfg.p_max_w() - sol.beams.total_power()).epsilon(1e-9));

  // EH rows evaluate to (nearly) the harvested energy minus the threshold.
  for (int k = 0; k < 2; ++k)
    CHECK(eval_expr(p.constraints[1 + k].expr, vals) ==
          doctest::Approx(harvested_energy(cs, sol, cfg, k) - cfg.e_min_w()).epsilon(1e-4));
}

TEST_CASE("coefficient subproblem shape and objective at the incumbent") {
  SystemConfig cfg;
  cfg.m = 2;
  cfg.n = 2;
  cfg.k_r = 1;
  cfg.k_t = 1;
  cfg.seed = 12;
  const ChannelSet cs = build_channels(cfg);
  RngStream rng(derive_seed(12, "sdr-p3"));
  const SolutionState sol = random_solution(cfg, rng);
  const auto aux = sdr::update_auxiliary(cs, sol, cfg);

  const auto p = sdr::build_p3(cs, sol.beams, sol.ps, aux, cfg);
  p.validate();
  REQUIRE(p.dims.size() == 2);
  CHECK(p.dims[0] == 3);
  CHECK(p.dims[1] == 3);
  CHECK(p.log_terms.size() == 2);
  // 2 EH + 2 normalization + 2 coupling rows.
  REQUIRE(p.constraints.size() == 6);
  int eq_rows = 0;
  for (const auto& c : p.constraints) eq_rows += c.rel == conic::Relation::Eq;
  CHECK(eq_rows == 4);

  const auto vals = lift_star(sol.star);
  CHECK(eval_problem(p, vals) == doctest::Approx(kLn2 * sum_rate(cs, sol, cfg)).epsilon(1e-9));
  // Coupling and normalization rows are satisfied by any physical lifting.
  for (const auto& c : p.constraints)
    if (c.rel == conic::Relation::Eq) CHECK(std::abs(eval_expr(c.expr, vals)) < 1e-12);
}

TEST_CASE("star stack reproduces the effective channel quadratically") {
  SystemConfig cfg;
  cfg.m = 3;
  cfg.n = 5;
  cfg.k_r = 1;
  cfg.k_t = 1;
  cfg.seed = 13;
  const ChannelSet cs = build_channels(cfg);
  RngStream rng(derive_seed(13, "sdr-stack"));
  const SolutionState sol = random_solution(cfg, rng);

  const auto vals = lift_star(sol.star);
  for (int k = 0; k < 2; ++k) {
    const CMat d_all = sdr::star_quadratic(cs, sol.beams, k, false);
    const CMat d_bar = sdr::star_quadratic(cs, sol.beams, k, true);
    // D is PSD.
    Eigen::SelfAdjointEigenSolver<CMat> es(d_all, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);

    const Eigen::RowVectorXcd a = effective_channel(cs, sol.star, k);
    double total = 0.0, interf = 0.0;
    for (int j = 0; j < 2; ++j) {
      const double pj = std::norm((a * sol.beams.f.col(j)).value());
      total += pj;
      if (j != k) interf += pj;
    }
    const CMat& v = vals[cs.sides[k] == Side::Reflect ? 0 : 1];
    CHECK((d_all * v).trace().real() == doctest::Approx(total).epsilon(1e-10));
    CHECK((d_bar * v).trace().real() == doctest::Approx(interf).epsilon(1e-10).scale(1e-16));
  }
}

TEST_CASE("interference matrix vanishes for a single beam") {
  SystemConfig cfg;
  cfg.m = 2;
  cfg.n = 3;
  cfg.seed = 14;
  const ChannelSet cs = build_channels(cfg);
  BeamformerSet beams;
  beams.f = CMat::Random(2, 1);  // one beam: the j != k sum is empty
  CHECK(sdr::star_quadratic(cs, beams, 0, true).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("subproblem modes: reflect-only and frozen amplitudes") {
  SystemConfig cfg;
  cfg.m = 2;
  cfg.n = 2;
  cfg.k_r = 1;
  cfg.k_t = 1;
  cfg.e_min_dbm = -1000.0;  // focus on mode structure, not EH feasibility
  cfg.seed = 15;
  const ChannelSet cs = build_channels(cfg);
  RngStream rng(derive_seed(15, "sdr-modes"));
  const SolutionState sol = random_solution(cfg, rng);
  const auto aux = sdr::update_auxiliary(cs, sol, cfg);

  sdr::P3Options ro;
  ro.mode = sdr::StarMode::ReflectOnly;
  const auto p_ro = sdr::build_p3(cs, sol.beams, sol.ps, aux, cfg, ro);
  p_ro.validate();
  REQUIRE(p_ro.dims.size() == 1);
  CHECK(p_ro.log_terms.size() == 2);  // the dark-side term is constant-only
  CHECK(p_ro.log_terms[1].terms.empty());

  sdr::P3Options eh;
  eh.mode = sdr::StarMode::EqualHalf;
  const auto p_eh = sdr::build_p3(cs, sol.beams, sol.ps, aux, cfg, eh);
  p_eh.validate();
  REQUIRE(p_eh.dims.size() == 2);
  // 2 EH + 2 normalization + 2 per-element rows per side.
  CHECK(p_eh.constraints.size() == 8);
  int half_rows = 0;
  for (const auto& c : p_eh.constraints)
    half_rows += c.rel == conic::Relation::Eq && c.expr.constant == -0.5;
  CHECK(half_rows == 4);

  // The frozen-amplitude problem is a restriction of the free one: its
  // optimum cannot exceed it.
  const auto r_free = conic::solve_conic(sdr::build_p3(cs, sol.beams, sol.ps, aux, cfg));
  const auto r_eh = conic::solve_conic(p_eh);
  REQUIRE(r_free.ok());
  REQUIRE(r_eh.ok());
  CHECK(r_eh.objective <= r_free.objective + 1e-6);
}

TEST_CASE("single-user beamformer subproblem matches the matched filter") {
  SystemConfig cfg;
  cfg.m = 2;
  cfg.n = 2;
  cfg.k_r = 1;
  cfg.k_t = 1;  // config floor; the hand-built channel set has one user
  cfg.e_min_dbm = -1000.0;  // EH off
  RngStream rng(derive_seed(16, "sdr-mrt"));
  ChannelSet cs;
  cs.G = CMat(2, 2);
  cs.h = {CVec(2)};
  cs.g = {CVec(2)};
  cs.sides = {Side::Reflect};
  for (int i = 0; i < 2; ++i) {
    cs.h[0](i) = 1e-4 * rng.cnormal();
    cs.g[0](i) = 1e-3 * rng.cnormal();
    for (int j = 0; j < 2; ++j) cs.G(i, j) = 1e-2 * rng.cnormal();
  }

  SolutionState sol;
  sol.star = StarCoefficients::uniform_half(2);
  sol.beams.f = CMat(2, 1);
  sol.beams.f << std::sqrt(0.4 * cfg.p_max_w()), std::sqrt(0.4 * cfg.p_max_w());
  sol.ps.rho = RVec::Constant(1, 0.6);
  const auto aux = sdr::update_auxiliary(cs, sol, cfg);

  const auto p = sdr::build_p2(cs, sol.star, sol.ps, aux, cfg);
  const auto res = conic::solve_conic(p);
  REQUIRE(res.status == conic::SolveStatus::Optimal);

  const Eigen::RowVectorXcd a = effective_channel(cs, sol.star, 0);
  const double gamma = 1.0 / cfg.sigma2_w();
  const double c = cfg.delta2_w() * gamma / sol.ps.rho(0);
  const double expected = std::log(gamma * a.squaredNorm() * cfg.p_max_w() + 1.0 + c) -
                          aux.s(0) * (1.0 + c) + std::log(aux.s(0)) + 1.0;
  CHECK(res.objective == doctest::Approx(expected).epsilon(1e-6));
}
