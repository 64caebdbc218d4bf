#include "starswipt/conic.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace starswipt::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Safety factor on the mu*nu gap bound covering the distance between a
// verified iterate (squared decrement <= 1e-3 at psi_mu's scale, so a Newton
// decrement of at most ~0.032) and the exact central point it stands in for.
constexpr double kGapSlop = 1.2;

// Compensated dot product (fma products + Neumaier summation). The barrier
// rows enter the Newton system with weights mu / slack^2, which amplify any
// rounding in a . x by orders of magnitude near the central-path endgame;
// evaluating those dots to roughly double-double accuracy keeps iterative
// refinement contractive there.
double dot2(const VectorXd& a, const VectorXd& b) {
  double s = 0.0, c = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double p = a[i] * b[i];
    const double ep = std::fma(a[i], b[i], -p);
    const double t = s + p;
    c += (std::abs(s) >= std::abs(p) ? (s - t) + p : (p - t) + s) + ep;
    s = t;
  }
  return s + c;
}

// ---------------------------------------------------------------------------
// Real packing of Hermitian matrices.
//
// A d x d Hermitian X maps to d*d real coordinates: the d diagonal entries,
// then (Re X_pq, Im X_pq) for p < q in row-major order. "Point" packing
// stores entries verbatim; "functional" packing doubles the off-diagonal
// pairs so that dot(functional(A), point(X)) = Re Tr(A X) for Hermitian A.
// ---------------------------------------------------------------------------

void pack_point(const CMat& X, double* out) {
  const int d = static_cast<int>(X.rows());
  int idx = 0;
  for (int p = 0; p < d; ++p) out[idx++] = X(p, p).real();
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) {
      out[idx++] = X(p, q).real();
      out[idx++] = X(p, q).imag();
    }
}

CMat unpack_point(const double* x, int d) {
  CMat X(d, d);
  int idx = 0;
  for (int p = 0; p < d; ++p) X(p, p) = x[idx++];
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) {
      const double re = x[idx++], im = x[idx++];
      X(p, q) = {re, im};
      X(q, p) = {re, -im};
    }
  return X;
}

void add_functional(const CMat& A, double scale, double* out) {
  const int d = static_cast<int>(A.rows());
  int idx = 0;
  for (int p = 0; p < d; ++p) out[idx++] += scale * A(p, p).real();
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) {
      out[idx++] += scale * 2.0 * A(p, q).real();
      out[idx++] += scale * 2.0 * A(p, q).imag();
    }
}

CMat unpack_functional(const double* y, int d) {
  CMat G(d, d);
  int idx = 0;
  for (int p = 0; p < d; ++p) G(p, p) = y[idx++];
  for (int p = 0; p < d; ++p)
    for (int q = p + 1; q < d; ++q) {
      const double re = y[idx++], im = y[idx++];
      G(p, q) = {0.5 * re, 0.5 * im};
      G(q, p) = {0.5 * re, -0.5 * im};
    }
  return G;
}

// ---------------------------------------------------------------------------
// Compiled problem: dense real rows over the packed coordinate vector.
// ---------------------------------------------------------------------------

struct Row {
  VectorXd a;
  double c = 0.0;
};

struct Compiled {
  std::vector<int> dims;
  std::vector<int> offsets;
  int n = 0;

  VectorXd q;
  double q0 = 0.0;
  std::vector<Row> logs;
  std::vector<Row> ges;  // a.x + c >= 0, row-normalized
  MatrixXd A;            // equalities A x = b, row-normalized
  VectorXd b;

  bool const_infeasible = false;
  std::string diagnostics;
};

CMat hermitianize(const CMat& A) { return 0.5 * (A + A.adjoint()); }

VectorXd expr_coefficients(const Compiled& cp, const AffineExpr& e) {
  VectorXd a = VectorXd::Zero(cp.n);
  for (const auto& t : e.terms)
    add_functional(hermitianize(t.coeff), 1.0, a.data() + cp.offsets[t.var]);
  return a;
}

Compiled compile(const ConicProblem& p) {
  Compiled cp;
  cp.dims = p.dims;
  cp.offsets.resize(p.dims.size());
  int off = 0;
  for (size_t j = 0; j < p.dims.size(); ++j) {
    cp.offsets[j] = off;
    off += p.dims[j] * p.dims[j];
  }
  cp.n = off;

  cp.q = expr_coefficients(cp, p.linear_objective);
  cp.q0 = p.linear_objective.constant;

  for (const auto& lt : p.log_terms) {
    Row r{expr_coefficients(cp, lt), lt.constant};
    if (r.a.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, std::abs(r.c))) {
      if (r.c <= 0.0) {
        cp.const_infeasible = true;
        cp.diagnostics = "logarithm of a nonpositive constant";
      } else {
        cp.q0 += std::log(r.c);
      }
      continue;
    }
    cp.logs.push_back(std::move(r));
  }

  std::vector<Row> eqs;
  for (const auto& con : p.constraints) {
    Row r{expr_coefficients(cp, con.expr), con.expr.constant};
    if (con.rel == Relation::Le) {
      r.a = -r.a;
      r.c = -r.c;
    }
    const double amax = r.a.lpNorm<Eigen::Infinity>();
    if (amax <= 1e-14 * std::max(1.0, std::abs(r.c))) {
      // Constant row: either vacuous or a contradiction.
      if (con.rel == Relation::Eq ? std::abs(r.c) > 1e-12 : r.c < -1e-12) {
        cp.const_infeasible = true;
        cp.diagnostics = "constraint with no variables is violated";
      }
      continue;
    }
    const double scale = std::max(amax, std::abs(r.c));
    r.a /= scale;
    r.c /= scale;
    if (con.rel == Relation::Eq)
      eqs.push_back(std::move(r));
    else
      cp.ges.push_back(std::move(r));
  }

  cp.A.resize(static_cast<int>(eqs.size()), cp.n);
  cp.b.resize(static_cast<int>(eqs.size()));
  for (size_t i = 0; i < eqs.size(); ++i) {
    cp.A.row(static_cast<int>(i)) = eqs[i].a;
    cp.b(static_cast<int>(i)) = -eqs[i].c;  // a.x + c = 0  ->  a.x = -c
  }
  return cp;
}

// ---------------------------------------------------------------------------
// Newton working set. Phase I appends one margin coordinate s: blocks become
// X_j + s I and every inequality (plus every phase-II log argument) gains a
// +s slack; minimizing s finds a strictly feasible point or certifies that
// none exists.
// ---------------------------------------------------------------------------

struct Work {
  const Compiled* cp = nullptr;
  bool phase1 = false;
  int n = 0;  // coordinate count (cp->n, +1 in phase I)
  VectorXd q;
  double q0 = 0.0;
  std::vector<Row> logs;
  std::vector<Row> ges;
  MatrixXd A;
  VectorXd b;
  double nu = 0.0;  // barrier parameter of constraint barriers

  int blocks() const { return static_cast<int>(cp->dims.size()); }
  double s_of(const VectorXd& x) const { return phase1 ? x(n - 1) : 0.0; }
};

Work make_phase2(const Compiled& cp) {
  Work w;
  w.cp = &cp;
  w.n = cp.n;
  w.q = cp.q;
  w.q0 = cp.q0;
  w.logs = cp.logs;
  w.ges = cp.ges;
  w.A = cp.A;
  w.b = cp.b;
  w.nu = 0.0;
  for (int d : cp.dims) w.nu += d;
  w.nu += static_cast<double>(cp.ges.size());
  return w;
}

Work make_phase1(const Compiled& cp) {
  Work w;
  w.cp = &cp;
  w.phase1 = true;
  w.n = cp.n + 1;
  w.q = VectorXd::Zero(w.n);
  w.q(w.n - 1) = -1.0;  // maximize -s
  auto extend = [&](const Row& r) {
    Row e;
    e.a = VectorXd::Zero(w.n);
    e.a.head(cp.n) = r.a;
    e.a(w.n - 1) = 1.0;
    e.c = r.c;
    return e;
  };
  for (const auto& r : cp.ges) w.ges.push_back(extend(r));
  for (const auto& r : cp.logs) w.ges.push_back(extend(r));
  w.A.resize(cp.A.rows(), w.n);
  if (cp.A.rows() > 0) {
    w.A.setZero();
    w.A.leftCols(cp.n) = cp.A;
  }
  w.b = cp.b;
  w.nu = 0.0;
  for (int d : cp.dims) w.nu += d;
  w.nu += static_cast<double>(w.ges.size());
  return w;
}

struct State {
  VectorXd x;
  std::vector<CMat> X;  // effective blocks (including +sI in phase I)
  std::vector<Eigen::LLT<CMat>> llt;
  double logdet = 0.0;

  bool factor(const Work& w) {
    const int nb = w.blocks();
    X.resize(nb);
    llt.resize(nb);
    logdet = 0.0;
    const double s = w.s_of(x);
    for (int j = 0; j < nb; ++j) {
      const int d = w.cp->dims[j];
      X[j] = unpack_point(x.data() + w.cp->offsets[j], d);
      if (w.phase1) X[j] += s * CMat::Identity(d, d);
      llt[j].compute(X[j]);
      if (llt[j].info() != Eigen::Success) return false;
      double ld = 0.0;
      for (int i = 0; i < d; ++i) {
        const double dii = llt[j].matrixLLT()(i, i).real();
        if (!(dii > 0.0) || !std::isfinite(dii)) return false;
        ld += std::log(dii);
      }
      logdet += 2.0 * ld;
    }
    return true;
  }
};

// Linear part of the maximization objective (phase II adds log terms).
double eval_f(const Work& w, const VectorXd& x) {
  double f = w.q0 + w.q.dot(x);
  for (const auto& lt : w.logs) f += std::log(lt.c + lt.a.dot(x));
  return f;
}

// Barrier potential psi = -f + mu * B; +inf when x is outside the domain.
double eval_psi(const Work& w, const VectorXd& x, double mu, State& scratch) {
  scratch.x = x;
  if (!scratch.factor(w)) return kInf;
  double f = w.q0 + w.q.dot(x);
  double barrier = -scratch.logdet;
  for (const auto& lt : w.logs) {
    const double s = lt.c + lt.a.dot(x);
    if (!(s > 0.0)) return kInf;
    f += std::log(s);
  }
  for (const auto& r : w.ges) {
    const double s = r.c + r.a.dot(x);
    if (!(s > 0.0)) return kInf;
    barrier -= std::log(s);
  }
  return -f + mu * barrier;
}

// Per-iteration scaled coordinates. All Newton linear algebra runs in the
// congruence frame dXt = L^-1 dX L^-H per block (X = L L^H), where the
// log-det Hessian is exactly the functional-packing weight matrix: the
// kappa(X)^2 amplification of plain coordinates near the boundary never
// appears. In phase I the margin coordinate s couples into every block
// through M_j = (L^H L)^-1; that border is exactly rank-deficient against
// the block coordinates, so a small ridge kappa keeps it invertible.
struct ScaledSpace {
  const Work& w;
  const State& st;
  double mu;
  double kappa = 0.0;
  std::vector<CMat> L;  // lower factors
  std::vector<CMat> M;  // (L^H L)^-1 per block, phase I only
  VectorXd border;      // mu * func(M_j) stacked over block coords, phase I

  ScaledSpace(const Work& w_, const State& st_, double mu_) : w(w_), st(st_), mu(mu_) {
    L.resize(w.blocks());
    for (int j = 0; j < w.blocks(); ++j) L[j] = st.llt[j].matrixL();
    if (w.phase1) {
      M.resize(w.blocks());
      border = VectorXd::Zero(w.cp->n);
      double beta_s = 0.0;
      for (int j = 0; j < w.blocks(); ++j) {
        const int d = w.cp->dims[j];
        const CMat Linv = L[j].triangularView<Eigen::Lower>().solve(CMat::Identity(d, d));
        M[j] = Linv * Linv.adjoint();  // (L^H L)^-1
        add_functional(M[j], mu, border.data() + w.cp->offsets[j]);
        beta_s += mu * M[j].squaredNorm();
      }
      kappa = 1e-6 * (1.0 + beta_s);
    }
  }

  // Functional-packed coefficients transported to the scaled frame:
  // At_j = L_j^H A_j L_j blockwise; the phase-I s coordinate is untouched.
  VectorXd to_scaled(const VectorXd& a) const {
    VectorXd out(a.size());
    if (w.phase1) out(w.n - 1) = a(w.n - 1);
    for (int j = 0; j < w.blocks(); ++j) {
      const int d = w.cp->dims[j], off = w.cp->offsets[j];
      const CMat A = unpack_functional(a.data() + off, d);
      const CMat At = L[j].adjoint() * A * L[j];
      VectorXd tmp = VectorXd::Zero(d * d);
      add_functional(At, 1.0, tmp.data());
      out.segment(off, d * d) = tmp;
    }
    return out;
  }

  // Scaled direction back to plain coordinates: dX = L dXt L^H.
  VectorXd from_scaled(const VectorXd& v) const {
    VectorXd out(v.size());
    if (w.phase1) out(w.n - 1) = v(w.n - 1);
    const double ds = w.phase1 ? v(w.n - 1) : 0.0;
    for (int j = 0; j < w.blocks(); ++j) {
      const int d = w.cp->dims[j], off = w.cp->offsets[j];
      const CMat dXt = block_dir(v, j, ds, false);
      const CMat dX = L[j] * dXt * L[j].adjoint();
      VectorXd tmp(d * d);
      pack_point(dX, tmp.data());
      out.segment(off, d * d) = tmp;
    }
    return out;
  }

  // Scaled block direction; with_border adds the phase-I ds * M_j part.
  CMat block_dir(const VectorXd& v, int j, double ds, bool with_border) const {
    CMat dXt = unpack_point(v.data() + w.cp->offsets[j], w.cp->dims[j]);
    if (with_border && w.phase1) dXt += ds * M[j];
    return dXt;
  }

  // D~^-1: diagonal up to the border. Maps functional to point packing.
  VectorXd solve(const VectorXd& rhs) const {
    VectorXd out(rhs.size());
    auto blocks_solve = [&](const VectorXd& in, VectorXd& res) {
      for (int j = 0; j < w.blocks(); ++j) {
        const int d = w.cp->dims[j], off = w.cp->offsets[j];
        const CMat R = unpack_functional(in.data() + off, d);
        VectorXd tmp(d * d);
        pack_point(R, tmp.data());
        res.segment(off, d * d) = tmp / mu;
      }
    };
    if (!w.phase1) {
      blocks_solve(rhs, out);
      return out;
    }
    // Bordered solve; D~^-1 border equals point(M_j) stacked, and
    // beta_s - border . that cancels exactly, leaving the ridge as pivot.
    VectorXd t1 = VectorXd::Zero(w.cp->n);
    blocks_solve(rhs, t1);
    const double z = (rhs(w.n - 1) - border.dot(t1)) / kappa;
    out.head(w.cp->n) = t1;
    for (int j = 0; j < w.blocks(); ++j) {
      const int d = w.cp->dims[j];
      VectorXd pm(d * d);
      pack_point(M[j], pm.data());
      out.segment(w.cp->offsets[j], d * d) -= pm * z;
    }
    out(w.n - 1) = z;
    return out;
  }

  // Forward application of the scaled log-det Hessian (plus ridge).
  VectorXd apply(const VectorXd& v) const {
    VectorXd out = VectorXd::Zero(v.size());
    const double ds = w.phase1 ? v(w.n - 1) : 0.0;
    for (int j = 0; j < w.blocks(); ++j) {
      const CMat dXt = block_dir(v, j, ds, true);
      add_functional(dXt, mu, out.data() + w.cp->offsets[j]);
      if (w.phase1) out(w.n - 1) += mu * (M[j].conjugate().cwiseProduct(dXt)).sum().real();
    }
    if (w.phase1) out(w.n - 1) += kappa * ds;
    return out;
  }

  // v' D~ v.
  double quad(const VectorXd& v) const {
    double acc = 0.0;
    const double ds = w.phase1 ? v(w.n - 1) : 0.0;
    for (int j = 0; j < w.blocks(); ++j) acc += mu * block_dir(v, j, ds, true).squaredNorm();
    if (w.phase1) acc += kappa * ds * ds;
    return acc;
  }
};

struct StepInfo {
  VectorXd dx;               // plain coordinates
  double decrement2 = 0.0;
  double dirder = 0.0;
  double block_tmax = kInf;  // largest step keeping the blocks positive
};

// One Newton direction for psi_mu restricted to the equality manifold,
// computed in the scaled frame and polished with two rounds of iterative
// refinement against the forward Hessian.
std::optional<StepInfo> newton_direction(const Work& w, const State& st, double mu) {
  const int n = w.n;
  const int m = static_cast<int>(w.A.rows());

  ScaledSpace S(w, st, mu);

  // Gradient of psi and the rank-one Hessian rows, in scaled coordinates.
  // The barrier's block gradient is exactly -mu * func(identity) there.
  VectorXd g = -S.to_scaled(w.q);
  std::vector<std::pair<VectorXd, double>> rank1;  // (scaled row, weight)
  rank1.reserve(w.logs.size() + w.ges.size());
  for (const auto& lt : w.logs) {
    const double s = lt.c + lt.a.dot(st.x);
    if (!(s > 0.0)) return std::nullopt;
    const VectorXd a = S.to_scaled(lt.a);
    g -= a / s;
    rank1.push_back({a, 1.0 / (s * s)});
  }
  for (const auto& row : w.ges) {
    const double s = row.c + row.a.dot(st.x);
    if (!(s > 0.0)) return std::nullopt;
    const VectorXd a = S.to_scaled(row.a);
    g -= mu * a / s;
    rank1.push_back({a, mu / (s * s)});
  }
  for (int j = 0; j < w.blocks(); ++j) {
    const int d = w.cp->dims[j], off = w.cp->offsets[j];
    for (int i = 0; i < d; ++i) g(off + i) -= mu;
  }
  if (w.phase1) {
    double tr = 0.0;
    for (int j = 0; j < w.blocks(); ++j) tr += S.M[j].trace().real();
    g(n - 1) -= mu * tr;
  }

  const int r = static_cast<int>(rank1.size());
  MatrixXd U(n, r);
  VectorXd cw(r);
  for (int i = 0; i < r; ++i) {
    U.col(i) = rank1[i].first;
    cw(i) = rank1[i].second;
  }
  MatrixXd At(m, n);  // scaled equality rows
  for (int i = 0; i < m; ++i) At.row(i) = S.to_scaled(w.A.row(i).transpose()).transpose();

  auto hess_apply = [&](const VectorXd& v) {
    VectorXd out = S.apply(v);
    for (int i = 0; i < r; ++i) out += U.col(i) * (cw(i) * dot2(U.col(i), v));
    return out;
  };

  MatrixXd W(n, r), Z(n, m);
  for (int i = 0; i < r; ++i) W.col(i) = S.solve(U.col(i));
  for (int i = 0; i < m; ++i) Z.col(i) = S.solve(At.row(i).transpose());

  Eigen::PartialPivLU<MatrixXd> lu;
  if (r + m > 0) {
    MatrixXd small(r + m, r + m);
    if (r > 0) small.topLeftCorner(r, r) = MatrixXd::Identity(r, r) + cw.asDiagonal() * (U.transpose() * W);
    if (r > 0 && m > 0) {
      small.topRightCorner(r, m) = cw.asDiagonal() * (U.transpose() * Z);
      small.bottomLeftCorner(m, r) = At * W;
    }
    if (m > 0) small.bottomRightCorner(m, m) = At * Z;
    lu.compute(small);
  }

  // Solves H dx + At' lam = rhs1, At dx = rhs2 through the low-rank system.
  auto kkt_solve = [&](const VectorXd& rhs1, const VectorXd& rhs2, VectorXd& dx, VectorXd& lam) -> bool {
    const VectorXd d0 = S.solve(rhs1);
    if (r + m == 0) {
      dx = d0;
      lam.resize(0);
      return dx.allFinite();
    }
    VectorXd rhs(r + m);
    if (r > 0) rhs.head(r) = cw.asDiagonal() * (U.transpose() * d0);
    if (m > 0) rhs.tail(m) = At * d0 - rhs2;
    const VectorXd sol = lu.solve(rhs);
    if (!sol.allFinite()) return false;
    dx = d0;
    if (r > 0) dx -= W * sol.head(r);
    if (m > 0) dx -= Z * sol.tail(m);
    lam = sol.tail(m);
    return dx.allFinite();
  };

  const VectorXd r_eq = m > 0 ? VectorXd(w.b - w.A * st.x) : VectorXd(0);
  VectorXd dxt, lam;
  if (!kkt_solve(-g, r_eq, dxt, lam)) return std::nullopt;
  for (int pass = 0; pass < 3; ++pass) {
    VectorXd res1 = -g - hess_apply(dxt);
    if (m > 0) res1 -= At.transpose() * lam;
    if (res1.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + g.lpNorm<Eigen::Infinity>())) break;
    const VectorXd res2 = m > 0 ? VectorXd(r_eq - At * dxt) : VectorXd(0);
    VectorXd ddx, dlam;
    if (!kkt_solve(res1, res2, ddx, dlam)) break;
    dxt += ddx;
    if (m > 0) lam += dlam;
  }

  StepInfo info;
  info.dx = S.from_scaled(dxt);
  info.dirder = dot2(g, dxt);
  double dec2 = S.quad(dxt);
  for (int i = 0; i < r; ++i) {
    const double t = dot2(U.col(i), dxt);
    dec2 += cw(i) * t * t;
  }
  info.decrement2 = std::max(dec2, 0.0);

  // X + t dX > 0 iff I + t dXt > 0 blockwise (congruence-invariant).
  const double ds = w.phase1 ? dxt(n - 1) : 0.0;
  for (int j = 0; j < w.blocks(); ++j) {
    Eigen::SelfAdjointEigenSolver<CMat> es(S.block_dir(dxt, j, ds, true), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < 0.0) info.block_tmax = std::min(info.block_tmax, -1.0 / lmin);
  }
  return info;
}

// Largest step keeping the scalar barrier rows strictly positive. The
// matching block bound rides along in StepInfo::block_tmax.
double max_row_step(const Work& w, const State& st, const VectorXd& dx) {
  double t_max = kInf;
  auto row_limit = [&](const Row& row) {
    const double slope = row.a.dot(dx);
    if (slope < 0.0) {
      const double slack = row.c + row.a.dot(st.x);
      t_max = std::min(t_max, -slack / slope);
    }
  };
  for (const auto& lt : w.logs) row_limit(lt);
  for (const auto& r : w.ges) row_limit(r);
  return t_max;
}

struct StageOutcome {
  int steps = 0;
  double decrement2 = kInf;
  bool converged = false;
  bool early_exit = false;
  bool stalled = false;
};

// Centers psi_mu until the squared Newton decrement (an affine-invariant
// proximity measure) drops below dec2_tol. psi_mu weights the constraint
// barrier by mu, so for mu < 1 its self-concordance constant degrades like
// 1/sqrt(mu); callers must shrink dec2_tol proportionally to mu or the
// decrement loses its proximity meaning.
StageOutcome newton_stage(const Work& w, State& st, double mu, double dec2_tol, int max_iters,
                          const std::function<bool(const State&)>& early) {
  StageOutcome out;
  State scratch;
  for (int it = 0; it < max_iters; ++it) {
    auto step = newton_direction(w, st, mu);
    if (!step) {
      out.stalled = true;
      return out;
    }
    out.decrement2 = step->decrement2;
    const bool small = step->decrement2 <= dec2_tol;
    if (small || !(step->dirder < 0.0)) {
      // A non-descent direction whose decrement still exceeds the stage
      // tolerance means the linear algebra lost accuracy even after
      // refinement. That is a stall, never convergence: trusting it here is
      // what lets the path walk off-center and certify bogus optima.
      out.converged = small;
      out.stalled = !small;
      return out;
    }

    double ge_logs = 0.0;
    for (const auto& r : w.ges) ge_logs += std::log(r.c + r.a.dot(st.x));
    const double psi0 = -eval_f(w, st.x) + mu * (-st.logdet - ge_logs);
    const double fuzz = 1e-14 * (1.0 + std::abs(psi0));  // representable-change floor

    double t = std::min(1.0, 0.995 * std::min(step->block_tmax, max_row_step(w, st, step->dx)));
    bool accepted = false;
    for (int bt = 0; bt < 60 && t > 1e-14; ++bt) {
      const double psi_t = eval_psi(w, st.x + t * step->dx, mu, scratch);
      if (psi_t <= psi0 + 0.01 * t * step->dirder + fuzz) {
        st = scratch;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++out.steps;
    if (!accepted) {
      out.stalled = true;
      return out;
    }
    if (early && early(st)) {
      out.early_exit = true;
      return out;
    }
  }
  return out;
}

// Minimum eigenvalue over the raw (phase II) blocks of x.
double min_block_eig(const Compiled& cp, const VectorXd& x) {
  double lo = kInf;
  for (size_t j = 0; j < cp.dims.size(); ++j) {
    const CMat X = unpack_point(x.data() + cp.offsets[j], cp.dims[j]);
    Eigen::SelfAdjointEigenSolver<CMat> es(X, Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return cp.dims.empty() ? 0.0 : lo;
}

double min_row_slack(const Compiled& cp, const VectorXd& x, bool include_logs) {
  double lo = kInf;
  for (const auto& r : cp.ges) lo = std::min(lo, r.c + r.a.dot(x));
  if (include_logs)
    for (const auto& r : cp.logs) lo = std::min(lo, r.c + r.a.dot(x));
  return lo;
}

// Least-squares correction onto the equality rows.
void project_equalities(const Compiled& cp, VectorXd& x) {
  const int m = static_cast<int>(cp.A.rows());
  if (m == 0) return;
  const VectorXd resid = cp.b - cp.A * x;
  if (resid.lpNorm<Eigen::Infinity>() < 1e-13) return;
  const MatrixXd AAt = cp.A * cp.A.transpose();
  x += cp.A.transpose() * AAt.ldlt().solve(resid);
}

}  // namespace

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Inaccurate: return "inaccurate";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Failure: return "failure";
  }
  return "unknown";
}

void ConicProblem::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("ConicProblem: " + m); };
  for (int d : dims)
    if (d < 1) fail("variable dimension must be positive");
  auto check_expr = [&](const AffineExpr& e) {
    for (const auto& t : e.terms) {
      if (t.var < 0 || t.var >= static_cast<int>(dims.size())) fail("term references undeclared variable");
      if (t.coeff.rows() != dims[t.var] || t.coeff.cols() != dims[t.var]) fail("coefficient dimension mismatch");
      const double scale = 1.0 + t.coeff.cwiseAbs().maxCoeff();
      if ((t.coeff - t.coeff.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        fail("coefficient is not Hermitian");
    }
  };
  check_expr(linear_objective);
  for (const auto& lt : log_terms) check_expr(lt);
  for (const auto& c : constraints) check_expr(c.expr);
  if (!warm_start.empty()) {
    if (warm_start.size() != dims.size()) fail("warm start size mismatch");
    for (size_t j = 0; j < dims.size(); ++j)
      if (warm_start[j].rows() != dims[j] || warm_start[j].cols() != dims[j])
        fail("warm start dimension mismatch");
  }
}

void ConicProblem::dump(std::ostream& os) const {
  auto put_expr = [&os](const std::string& tag, const AffineExpr& e) {
    os << tag << " const " << e.constant << "\n";
    for (const auto& t : e.terms)
      for (int p = 0; p < t.coeff.rows(); ++p)
        for (int q = p; q < t.coeff.cols(); ++q)
          if (t.coeff(p, q) != std::complex<double>(0.0, 0.0))
            os << tag << " term " << t.var << " " << p << " " << q << " " << t.coeff(p, q).real()
               << " " << t.coeff(p, q).imag() << "\n";
  };
  for (size_t j = 0; j < dims.size(); ++j) os << "var " << j << " dim " << dims[j] << "\n";
  put_expr("objective", linear_objective);
  for (size_t t = 0; t < log_terms.size(); ++t) put_expr("log " + std::to_string(t), log_terms[t]);
  for (size_t i = 0; i < constraints.size(); ++i) {
    const char* rel = constraints[i].rel == Relation::Eq   ? "eq"
                      : constraints[i].rel == Relation::Ge ? "ge"
                                                           : "le";
    put_expr("con " + std::to_string(i) + " " + rel, constraints[i].expr);
  }
}

SolverResult solve_conic(const ConicProblem& problem, const SolverOptions& options) {
  problem.validate();
  const Compiled cp = compile(problem);

  SolverResult res;
  if (cp.const_infeasible) {
    res.status = SolveStatus::Infeasible;
    res.message = cp.diagnostics;
    return res;
  }
  if (cp.n == 0) {
    res.status = SolveStatus::Optimal;
    res.objective = cp.q0;
    return res;
  }

  // Starting point. The warm start is advisory: a point hugging the PSD or
  // slack boundary wrecks the Newton conditioning, so it is only adopted
  // when comfortably interior after equality projection; otherwise the
  // solver falls back to projected identity blocks and finds its own
  // interior point.
  VectorXd x(cp.n);
  bool use_warm = !problem.warm_start.empty();
  if (use_warm) {
    for (size_t j = 0; j < cp.dims.size(); ++j)
      pack_point(hermitianize(problem.warm_start[j]), x.data() + cp.offsets[j]);
    project_equalities(cp, x);
    for (size_t j = 0; j < cp.dims.size() && use_warm; ++j) {
      const CMat X = unpack_point(x.data() + cp.offsets[j], cp.dims[j]);
      Eigen::SelfAdjointEigenSolver<CMat> es(X, Eigen::EigenvaluesOnly);
      const double scale = std::max(X.trace().real() / cp.dims[j], 1e-12);
      if (es.eigenvalues().minCoeff() < 1e-6 * scale) use_warm = false;
    }
    if (min_row_slack(cp, x, true) < 1e-6) use_warm = false;
  }
  if (!use_warm) {
    x.setZero();
    for (size_t j = 0; j < cp.dims.size(); ++j)
      for (int i = 0; i < cp.dims[j]; ++i) x(cp.offsets[j] + i) = 1.0;
    project_equalities(cp, x);
  }

  const Work w2 = make_phase2(cp);
  int total_steps = 0;

  // Phase I: needed only when the start is not strictly interior. A margin
  // variable s is driven negative; s minus the barrier gap bounds the best
  // achievable margin from below, which certifies infeasibility when the
  // bound stays positive.
  const double margin0 = std::min(min_block_eig(cp, x), min_row_slack(cp, x, true));
  if (!(margin0 > 1e-12)) {
    const Work w1 = make_phase1(cp);
    State st1;
    st1.x.resize(w1.n);
    st1.x.head(cp.n) = x;
    st1.x(w1.n - 1) = 1.5 * std::max(0.0, -margin0) + 0.1;
    if (!st1.factor(w1)) {
      res.status = SolveStatus::Failure;
      res.message = "phase I start could not be factorized";
      return res;
    }
    auto early = [&](const State& s) { return s.x(w1.n - 1) <= -options.phase1_margin; };
    bool proved_infeasible = false;
    bool stalled = false;
    double mu1 = 0.1;
    double s_now = st1.x(w1.n - 1);
    for (int stage = 0; stage < 12; ++stage) {
      const StageOutcome so = newton_stage(w1, st1, mu1, 1e-6 * std::min(1.0, mu1),
                                           options.max_newton_per_stage, early);
      total_steps += so.steps;
      s_now = st1.x(w1.n - 1);
      if (so.early_exit || s_now < -1e-9) break;
      if (so.converged && s_now - mu1 * w1.nu > 0.0) {
        proved_infeasible = true;
        break;
      }
      stalled = so.stalled;
      if (stalled || mu1 <= 1e-11 || total_steps > options.max_total_newton) break;
      mu1 *= 0.05;
    }
    if (!(s_now < -1e-10)) {
      res.status = proved_infeasible || !stalled ? SolveStatus::Infeasible : SolveStatus::Failure;
      res.message = "phase I margin " + std::to_string(s_now);
      res.newton_steps = total_steps;
      return res;
    }
    x = st1.x.head(cp.n);
  }

  // Phase II: barrier path following.
  State st;
  st.x = x;
  if (!st.factor(w2) || !(min_row_slack(cp, st.x, true) > 0.0)) {
    res.status = SolveStatus::Failure;
    res.message = "interior start lost after phase I";
    return res;
  }

  // Balance the initial barrier weight against the objective gradient.
  double mu;
  {
    VectorXd gf = w2.q;
    for (const auto& lt : w2.logs) gf += lt.a / (lt.c + lt.a.dot(st.x));
    VectorXd gb = VectorXd::Zero(cp.n);
    for (int j = 0; j < w2.blocks(); ++j) {
      const int d = cp.dims[j];
      const CMat Xinv = st.llt[j].solve(CMat::Identity(d, d));
      add_functional(Xinv, 1.0, gb.data() + cp.offsets[j]);
    }
    for (const auto& r : w2.ges) gb += r.a / (r.c + r.a.dot(st.x));
    mu = std::clamp(gf.norm() / std::max(gb.norm(), 1e-12), 1e-6, 1e4);
  }

  // Walk the central path. An iterate vouches for the mu*nu duality gap only
  // when its centering is verified at the self-concordance scale of psi_mu
  // (the decrement test shrinks with mu; see newton_stage). A stage that hits
  // its step cap is retried at the same mu while the decrement keeps
  // improving; once centering breaks down the solve rolls back to the last
  // verified iterate instead of reporting wherever the walk stopped.
  VectorXd x_cert;
  double mu_cert = kInf;
  double f_cert = -kInf;
  double last_dec2 = kInf;
  int repeats = 0;
  int retreats = 0;
  for (int stage = 0; stage < 160; ++stage) {
    const double dec2_tol = 1e-3 * std::min(1.0, mu);
    const StageOutcome so =
        newton_stage(w2, st, mu, dec2_tol, options.max_newton_per_stage, nullptr);
    total_steps += so.steps;
    if (so.converged) {
      x_cert = st.x;
      mu_cert = mu;
      f_cert = eval_f(w2, st.x);
      repeats = 0;
      last_dec2 = kInf;
      if (kGapSlop * mu * w2.nu <= options.tol * (1.0 + std::abs(f_cert))) break;
      // Land the final stage on the target instead of overshooting it.
      const double mu_target = 0.7 * options.tol * (1.0 + std::abs(f_cert)) / w2.nu;
      mu = std::max(mu * options.mu_shrink, mu_target);
    } else if (!so.stalled) {
      // Step cap hit while still descending: retry this mu as long as the
      // decrement keeps shrinking.
      if (++repeats >= 5 || !(so.decrement2 < 0.9 * last_dec2)) break;
      last_dec2 = so.decrement2;
    } else if (mu_cert < kInf && ++retreats <= 8 && mu < 0.95 * mu_cert) {
      // Centering broke on this rung, usually by overshooting into slacks too
      // thin for double precision. Back up to the verified iterate and retry
      // with a geometrically smaller step toward the same target.
      st.x = x_cert;
      if (!st.factor(w2)) break;
      mu = std::sqrt(mu_cert * mu);
      repeats = 0;
      last_dec2 = kInf;
    } else {
      break;
    }
    if (total_steps > options.max_total_newton) break;
  }

  const bool certified = mu_cert < kInf;
  if (certified) st.x = x_cert;
  // The decrement test leaves lambda <= 0.01 at a verified iterate; the slop
  // factor absorbs that residual distance to the exact central point.
  const double gap = certified ? kGapSlop * mu_cert * w2.nu : kInf;
  const double f = certified ? f_cert : eval_f(w2, st.x);
  res.objective = f;
  res.newton_steps = total_steps;
  res.values.resize(cp.dims.size());
  for (size_t j = 0; j < cp.dims.size(); ++j)
    res.values[j] = unpack_point(st.x.data() + cp.offsets[j], cp.dims[j]);
  res.residuals.eq_infnorm =
      cp.A.rows() > 0 ? (cp.A * st.x - cp.b).lpNorm<Eigen::Infinity>() : 0.0;
  res.residuals.min_slack = cp.ges.empty() ? kInf : min_row_slack(cp, st.x, false);
  res.residuals.min_eigenvalue = min_block_eig(cp, st.x);
  res.residuals.gap_estimate = gap;

  const double rel = gap / (1.0 + std::abs(f));
  if (certified && rel <= options.tol && res.residuals.eq_infnorm <= 1e-7)
    res.status = SolveStatus::Optimal;
  else if (certified && rel <= options.inaccurate_tol && res.residuals.eq_infnorm <= 1e-6)
    res.status = SolveStatus::Inaccurate;
  else {
    res.status = SolveStatus::Failure;
    res.message = certified
                      ? "barrier path stalled with relative gap " + std::to_string(rel)
                      : "barrier path never certified a centered iterate";
  }
  return res;
}

}  // namespace starswipt::conic
