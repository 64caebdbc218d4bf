#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "starswipt/scenario.hpp"

namespace starswipt::conic {

// Affine functional of the Hermitian PSD matrix variables:
//   constant + sum_i Re Tr(coeff_i * X_{var_i}).
// Coefficients must be Hermitian (symmetrized on input within tolerance).
struct LinearTerm {
  int var = 0;
  CMat coeff;
};

struct AffineExpr {
  double constant = 0.0;
  std::vector<LinearTerm> terms;

  AffineExpr& add(int var, CMat coeff) {
    terms.push_back({var, std::move(coeff)});
    return *this;
  }
};

enum class Relation { Eq, Ge, Le };  // expr == 0, expr >= 0, expr <= 0

struct Constraint {
  AffineExpr expr;
  Relation rel = Relation::Ge;
};

// Concave maximization over Hermitian PSD matrix variables:
//
//   maximize  linear_objective + sum_t ln(log_terms[t])
//   s.t.      constraints (affine ==/>=/<= 0),  X_j >= 0 (PSD) for all j.
//
// Only this shape is supported; it covers the two lifted subproblems of the
// alternating optimizer plus the toy problems used for solver sanity checks.
// A warm start may be supplied; it is advisory and is only adopted when it
// is comfortably interior (boundary points ruin Newton conditioning), else
// the solver projects an identity-scaled start onto the equality rows and
// finds an interior point itself.
struct ConicProblem {
  std::vector<int> dims;  // one Hermitian PSD variable per entry
  AffineExpr linear_objective;
  std::vector<AffineExpr> log_terms;
  std::vector<Constraint> constraints;
  std::vector<CMat> warm_start;  // empty, or one matrix per variable

  int add_variable(int dim) {
    dims.push_back(dim);
    return static_cast<int>(dims.size()) - 1;
  }

  // Throws std::invalid_argument on malformed input (bad indices, dimension
  // mismatches, non-Hermitian coefficients beyond 1e-8).
  void validate() const;

  // Text dump for cross-checking against external modeling tools. Layout:
  //   var <j> dim <d>
  //   objective const <c> / objective term <var> <row> <col> <re> <im>
  //   log <t> const <c> / log <t> term <var> <row> <col> <re> <im>
  //   con <i> <eq|ge|le> const <c> / con <i> term <var> <row> <col> <re> <im>
  // with one triplet line per upper-triangle (row <= col) nonzero.
  void dump(std::ostream& os) const;
};

enum class SolveStatus { Optimal, Inaccurate, Infeasible, Failure };

const char* to_string(SolveStatus status);

struct SolverOptions {
  // Duality-gap target, relative to 1 + |objective|. Optimal is only reported
  // from an iterate whose centering was verified, and verification in double
  // precision hits a wall once an active slack or block eigenvalue shrinks
  // toward sqrt(machine eps); the default keeps a margin above that wall.
  double tol = 2e-7;
  double inaccurate_tol = 1e-5;  // beyond this the result is a failure
  int max_newton_per_stage = 60;
  int max_total_newton = 4000;
  double mu_shrink = 0.15;
  double phase1_margin = 1e-3;  // interior margin sought before phase II
};

struct SolverResult {
  SolveStatus status = SolveStatus::Failure;
  std::vector<CMat> values;
  double objective = 0.0;
  int newton_steps = 0;
  struct Residuals {
    double eq_infnorm = 0.0;     // on row-normalized equalities
    double min_slack = 0.0;      // over row-normalized inequalities
    double min_eigenvalue = 0.0; // over PSD variables
    double gap_estimate = 0.0;   // barrier suboptimality bound
  } residuals;
  std::string message;

  bool ok() const { return status == SolveStatus::Optimal || status == SolveStatus::Inaccurate; }
};

// Primal barrier path-following solver. The PSD cones enter through the
// log-det barrier and the logarithmic objective terms are handled natively
// (they are their own self-concordant barriers), which is equivalent in
// expressive power to the usual PSD + exponential-cone formulation. A
// phase-I margin search (minimize s with X + sI > 0 and slacks + s > 0)
// supplies strictly feasible starts and certifies infeasibility when no
// interior exists.
SolverResult solve_conic(const ConicProblem& problem, const SolverOptions& options = {});

}  // namespace starswipt::conic
