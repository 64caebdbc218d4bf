#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "starswipt/conic.hpp"
#include "starswipt/rng.hpp"

using namespace starswipt;
using conic::AffineExpr;
using conic::ConicProblem;
using conic::Relation;
using conic::SolveStatus;

namespace {

CMat random_hermitian(int d, RngStream& rng) {
  CMat b(d, d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) b(r, c) = rng.cnormal();
  return 0.5 * (b + b.adjoint());
}

AffineExpr trace_expr(int var, int d, double constant) {
  AffineExpr e;
  e.constant = constant;
  e.add(var, CMat::Identity(d, d));
  return e;
}

}  // namespace

TEST_CASE("max Tr(AX) under a trace cap recovers the top eigenvalue") {
  RngStream rng(derive_seed(3, "conic-eig"));
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 4;
    const CMat A = random_hermitian(d, rng);
    Eigen::SelfAdjointEigenSolver<CMat> es(A);
    const double lmax = es.eigenvalues().maxCoeff();

    ConicProblem p;
    const int x = p.add_variable(d);
    p.linear_objective.add(x, A);
    p.constraints.push_back({trace_expr(x, d, -1.0), Relation::Le});

    const auto res = conic::solve_conic(p);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK(res.objective == doctest::Approx(lmax).epsilon(1e-6));
    CHECK(res.residuals.min_eigenvalue >= -1e-9);
    CHECK(res.values[0].trace().real() <= 1.0 + 1e-7);
  }
}

TEST_CASE("trace equality instead of inequality hits the same value") {
  RngStream rng(derive_seed(4, "conic-eig-eq"));
  const int d = 3;
  const CMat A = random_hermitian(d, rng);
  Eigen::SelfAdjointEigenSolver<CMat> es(A);

  ConicProblem p;
  const int x = p.add_variable(d);
  p.linear_objective.add(x, A);
  p.constraints.push_back({trace_expr(x, d, -1.0), Relation::Eq});

  const auto res = conic::solve_conic(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));
  CHECK(res.values[0].trace().real() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(res.residuals.eq_infnorm <= 1e-8);
}

TEST_CASE("logarithmic objective saturates its cap") {
  // maximize ln(x) s.t. x <= 5: optimum x = 5, value ln 5.
  ConicProblem p;
  const int x = p.add_variable(1);
  p.log_terms.push_back(AffineExpr{}.add(x, CMat::Identity(1, 1)));
  p.constraints.push_back({trace_expr(x, 1, -5.0), Relation::Le});

  const auto res = conic::solve_conic(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(std::log(5.0)).epsilon(1e-6));
  CHECK(res.values[0](0, 0).real() == doctest::Approx(5.0).epsilon(1e-5));
}

TEST_CASE("interior stationary point of ln(x) - x") {
  ConicProblem p;
  const int x = p.add_variable(1);
  p.log_terms.push_back(AffineExpr{}.add(x, CMat::Identity(1, 1)));
  p.linear_objective.add(x, -CMat::Identity(1, 1));

  const auto res = conic::solve_conic(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(res.values[0](0, 0).real() == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("boundary optimum of ln(1 + x) - 3x") {
  // Unconstrained in x >= 0 the maximizer of ln(1+x) - 3x is x = -2/3, so
  // the cone clamps it to x = 0 with value 0.
  ConicProblem p;
  const int x = p.add_variable(1);
  AffineExpr lg;
  lg.constant = 1.0;
  lg.add(x, CMat::Identity(1, 1));
  p.log_terms.push_back(lg);
  p.linear_objective.add(x, -3.0 * CMat::Identity(1, 1));

  const auto res = conic::solve_conic(p);
  REQUIRE(res.ok());
  CHECK(std::abs(res.objective) <= 1e-5);
  CHECK(res.values[0](0, 0).real() >= 0.0);
}

TEST_CASE("two blocks with a shared budget") {
  // maximize x + 2y s.t. x + y <= 1: all budget to y.
  ConicProblem p;
  const int x = p.add_variable(1);
  const int y = p.add_variable(1);
  p.linear_objective.add(x, CMat::Identity(1, 1)).add(y, 2.0 * CMat::Identity(1, 1));
  AffineExpr budget;
  budget.constant = -1.0;
  budget.add(x, CMat::Identity(1, 1)).add(y, CMat::Identity(1, 1));
  p.constraints.push_back({budget, Relation::Le});

  const auto res = conic::solve_conic(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(res.values[1](0, 0).real() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(res.values[0](0, 0).real()) <= 1e-5);
}

TEST_CASE("contradictory trace bounds are reported infeasible") {
  ConicProblem p;
  const int x = p.add_variable(2);
  p.linear_objective.add(x, CMat::Identity(2, 2));
  p.constraints.push_back({trace_expr(x, 2, -1.0), Relation::Le});  // Tr <= 1
  p.constraints.push_back({trace_expr(x, 2, -2.0), Relation::Ge});  // Tr >= 2

  const auto res = conic::solve_conic(p);
  CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("constant-violated constraint short-circuits") {
  ConicProblem p;
  (void)p.add_variable(1);
  AffineExpr bad;
  bad.constant = -1.0;  // -1 >= 0
  p.constraints.push_back({bad, Relation::Ge});
  const auto res = conic::solve_conic(p);
  CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("warm started resolve reproduces the optimum") {
  RngStream rng(derive_seed(5, "conic-warm"));
  const int d = 4;
  const CMat A = random_hermitian(d, rng);

  ConicProblem p;
  const int x = p.add_variable(d);
  p.linear_objective.add(x, A);
  p.constraints.push_back({trace_expr(x, d, -1.0), Relation::Le});

  const auto cold = conic::solve_conic(p);
  REQUIRE(cold.status == SolveStatus::Optimal);

  // A boundary warm start (the previous optimum) must not degrade the result.
  p.warm_start = cold.values;
  const auto warm = conic::solve_conic(p);
  REQUIRE(warm.status == SolveStatus::Optimal);
  CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-7));

  // An interior blend of the optimum is usable directly and solves faster
  // than from scratch would allow it to drift.
  const CMat blend = 0.8 * cold.values[0] + 0.2 * (cold.values[0].trace().real() / d) *
                                                CMat::Identity(d, d) * 0.9;
  p.warm_start = {blend};
  const auto interior = conic::solve_conic(p);
  REQUIRE(interior.status == SolveStatus::Optimal);
  CHECK(interior.objective == doctest::Approx(cold.objective).epsilon(1e-7));
}

TEST_CASE("validation rejects malformed problems") {
  ConicProblem p;
  const int x = p.add_variable(2);

  SUBCASE("wrong coefficient size") {
    p.linear_objective.add(x, CMat::Identity(3, 3));
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("non-Hermitian coefficient") {
    CMat bad = CMat::Zero(2, 2);
    bad(0, 1) = 1.0;  // missing conjugate partner
    p.linear_objective.add(x, bad);
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("dangling variable index") {
    p.linear_objective.add(7, CMat::Identity(2, 2));
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
  SUBCASE("warm start shape") {
    p.warm_start = {CMat::Identity(3, 3)};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  }
}

TEST_CASE("dump emits one line per upper-triangle nonzero") {
  ConicProblem p;
  const int x = p.add_variable(2);
  CMat A = CMat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(0, 1) = {0.5, -0.25};
  A(1, 0) = {0.5, 0.25};
  p.linear_objective.add(x, A);
  p.constraints.push_back({trace_expr(x, 2, -1.0), Relation::Le});

  std::ostringstream os;
  p.dump(os);
  const std::string text = os.str();
  CHECK(text.find("var 0 dim 2") != std::string::npos);
  CHECK(text.find("objective term 0 0 1 0.5 -0.25") != std::string::npos);
  CHECK(text.find("con 0 le const -1") != std::string::npos);
}
