#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <tuple>
#include <vector>

#include "optdiff/cyclic.hpp"
#include "optdiff/errors.hpp"
#include "optdiff/potential.hpp"

namespace optdiff {

using DiffusionVector = Eigen::VectorXd;

/// Uniform periodic mesh with cells K_n = [n/N, (n+1)/N), n = 0..N-1 (0-based).
/// Node j sits at j/N; cell n touches nodes n and n+1 mod N.
struct Mesh {
  int n_cells = 0;
  explicit Mesh(int n) : n_cells(n) {
    if (n < 3) throw InvalidArgument("mesh needs at least 3 cells");
  }
  double node(int j) const noexcept { return static_cast<double>(j) / n_cells; }
};

/// Output of the P1 assembly. The stiffness block of cell n is
/// s[n] * [[1,-1],[-1,1]] on nodes (n, n+1 mod N).
struct Assembly {
  int n = 0;
  double p = 2.0;
  Eigen::VectorXd q_left;  // left endpoint of each cell
  Eigen::VectorXd v_left;  // V at the left endpoint
  Eigen::VectorXd w;       // e^{-V} at the left endpoint
  Eigen::VectorXd s;       // stiffness scalars N e^{-V}
  Eigen::VectorXd omega;   // (1/N) e^{-pV}
  CyclicTridiag mass;
};

/// One-point-per-cell quadrature of the weighted P1 stiffness and mass matrices.
/// The mass matrix is the symmetric sum of element matrices
/// e^{-V(q_n)}/(6N) [[2,1],[1,2]].
inline Assembly assemble(const Potential& pot, const Mesh& mesh, double p = 2.0) {
  if (!(p >= 1.0)) throw InvalidArgument("p must be >= 1");
  const int n = mesh.n_cells;
  Assembly a;
  a.n = n;
  a.p = p;
  a.q_left.resize(n);
  a.v_left.resize(n);
  a.w.resize(n);
  a.s.resize(n);
  a.omega.resize(n);
  a.mass = CyclicTridiag(n);
  for (int c = 0; c < n; ++c) {
    const double q = mesh.node(c);
    const double v = pot(q);
    a.q_left[c] = q;
    a.v_left[c] = v;
    a.w[c] = std::exp(-v);
    a.s[c] = n * a.w[c];
    a.omega[c] = std::exp(-p * v) / n;
  }
  for (int c = 0; c < n; ++c) {
    const int j = c + 1 == n ? 0 : c + 1;
    const double c0 = a.w[c] / (6.0 * n);
    a.mass.diag[c] += 2.0 * c0;
    a.mass.diag[j] += 2.0 * c0;
    a.mass.off[c] += c0;
  }
  return a;
}

/// A(D) = sum_n D_n A_n.
inline CyclicTridiag stiffness(const Assembly& a, const DiffusionVector& d) {
  if (d.size() != a.n) throw InvalidArgument("diffusion vector length does not match mesh");
  CyclicTridiag m(a.n);
  for (int c = 0; c < a.n; ++c) {
    const int j = c + 1 == a.n ? 0 : c + 1;
    const double sc = a.s[c] * d[c];
    m.diag[c] += sc;
    m.diag[j] += sc;
    m.off[c] -= sc;
  }
  return m;
}

/// Periodic forward differences dU_n = U_{n+1} - U_n, one per cell.
inline Eigen::MatrixXd cell_differences(const Eigen::MatrixXd& u) {
  const Eigen::Index n = u.rows();
  Eigen::MatrixXd du(n, u.cols());
  du.topRows(n - 1) = u.bottomRows(n - 1) - u.topRows(n - 1);
  du.row(n - 1) = u.row(0) - u.row(n - 1);
  return du;
}

/// (row, col, value) triplets of the nonzero pattern, row-major order.
inline std::vector<std::tuple<int, int, double>> triplets(const CyclicTridiag& m) {
  const Eigen::MatrixXd dense = m.to_dense();
  std::vector<std::tuple<int, int, double>> out;
  for (int i = 0; i < dense.rows(); ++i)
    for (int j = 0; j < dense.cols(); ++j)
      if (dense(i, j) != 0.0) out.emplace_back(i, j, dense(i, j));
  return out;
}

inline constexpr int kAllEigenpairs = -1;

struct EigenSolution {
  Eigen::VectorXd sigmas;   // ascending
  Eigen::MatrixXd vectors;  // B-orthonormal columns
};

struct EigenOptions {
  double tol = 1e-10;
  int max_iter = 300;
  /// Optional initial block (for instance the vectors of a nearby solve).
  const Eigen::MatrixXd* warm = nullptr;
  /// Use the dense solver even for partial spectra.
  bool force_dense = false;
};

struct EigenStats {
  int iterations = 0;
  bool dense = false;
};

namespace detail {

inline void fix_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double m = std::abs(v(i, c));
      if (m > best * (1.0 + 1e-12)) {
        best = m;
        arg = i;
      }
    }
    if (v(arg, c) < 0.0) v.col(c) = -v.col(c);
  }
}

inline EigenSolution solve_dense(const CyclicTridiag& a, const CyclicTridiag& b, int count) {
  const Eigen::MatrixXd bd = b.to_dense();
  Eigen::LLT<Eigen::MatrixXd> llt(bd);
  if (llt.info() != Eigen::Success) throw CholeskyFailure("mass matrix is not positive definite");
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a.to_dense(), bd,
                                                               Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) throw CholeskyFailure("dense generalized eigensolver failed");
  const Eigen::Index k = count == kAllEigenpairs ? a.size() : count;
  EigenSolution sol{es.eigenvalues().head(k), es.eigenvectors().leftCols(k)};
  fix_signs(sol.vectors);
  return sol;
}

// B-orthonormalizes the columns of y in place (two passes of Cholesky QR).
inline bool b_orthonormalize(Eigen::MatrixXd& y, const CyclicTridiag& b, const Eigen::VectorXd& u1) {
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::RowVectorXd proj = (b * u1).transpose() * y;
    y -= u1 * proj;
    Eigen::MatrixXd g = y.transpose() * (b * y);
    g = 0.5 * (g + g.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) return false;
    y = llt.matrixU().solve<Eigen::OnTheRight>(y);
  }
  return true;
}

// Shift-invert block subspace iteration on the complement of the constants.
inline bool solve_subspace(const CyclicTridiag& a, const CyclicTridiag& b, int count,
                           const EigenOptions& opt, EigenSolution& out, EigenStats& stats) {
  const Eigen::Index n = a.size();
  const int want = count - 1;
  const int guard = std::max(4, want / 2);
  const int m = static_cast<int>(std::min<Eigen::Index>(want + guard, n - 1));

  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const double mass_total = ones.dot(b * ones);
  const Eigen::VectorXd u1 = ones / std::sqrt(mass_total);

  Eigen::MatrixXd x(n, m);
  int filled = 0;
  if (opt.warm && opt.warm->rows() == n) {
    for (Eigen::Index c = 0; c < opt.warm->cols() && filled < m; ++c) {
      const auto col = opt.warm->col(c);
      // skip columns parallel to the constants
      if (std::abs(col.dot(b * u1)) > 0.5 * std::sqrt(col.dot(b * col))) continue;
      x.col(filled++) = col;
    }
  }
  for (int j = 1; filled < m; ++j) {
    for (int phase = 0; phase < 2 && filled < m; ++phase) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double t = 2.0 * std::numbers::pi * j * static_cast<double>(i) / n;
        x(i, filled) = phase == 0 ? std::cos(t) : std::sin(t);
      }
      ++filled;
    }
  }

  // shift: a fraction of the Rayleigh quotient of the lowest Fourier modes
  double rq = 0.0;
  {
    Eigen::MatrixXd f(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
      f(i, 0) = std::cos(t);
      f(i, 1) = std::sin(t);
    }
    const Eigen::MatrixXd af = a * f, bf = b * f;
    rq = std::min(f.col(0).dot(af.col(0)) / f.col(0).dot(bf.col(0)),
                  f.col(1).dot(af.col(1)) / f.col(1).dot(bf.col(1)));
  }
  const double tau = rq > 0.0 ? 0.1 * rq : 1.0;
  CyclicTridiag k = a;
  k.axpy(tau, b);
  std::unique_ptr<CyclicLdlt> fac;
  try {
    fac = std::make_unique<CyclicLdlt>(k);
  } catch (const CholeskyFailure&) {
    return false;
  }

  if (!b_orthonormalize(x, b, u1)) return false;
  Eigen::VectorXd theta;
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::MatrixXd y = b * x;
    fac->solve_in_place(y);
    if (!b_orthonormalize(y, b, u1)) return false;
    Eigen::MatrixXd h = y.transpose() * (a * y);
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    theta = es.eigenvalues();
    x = y * es.eigenvectors();
    stats.iterations = it;

    const Eigen::MatrixXd ax = a * x.leftCols(want);
    const Eigen::MatrixXd bx = b * x.leftCols(want);
    bool done = true;
    for (int i = 0; i < want && done; ++i) {
      const double r = (ax.col(i) - theta[i] * bx.col(i)).cwiseAbs().maxCoeff();
      done = r <= opt.tol * (1.0 + std::abs(theta[i]));
    }
    if (done) {
      out.sigmas.resize(count);
      out.vectors.resize(n, count);
      out.sigmas[0] = 0.0;
      out.sigmas.tail(want) = theta.head(want);
      out.vectors.col(0) = u1;
      out.vectors.rightCols(want) = x.leftCols(want);
      fix_signs(out.vectors);
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Lowest `count` eigenpairs of A U = sigma B U (all of them for kAllEigenpairs).
/// Partial spectra use a structured shift-invert subspace iteration with the
/// constant mode deflated exactly; full spectra and fallbacks use a dense
/// Cholesky-reduced solve.
inline EigenSolution solve_generalized(const CyclicTridiag& a, const CyclicTridiag& b, int count,
                                       const EigenOptions& opt = {}, EigenStats* stats = nullptr) {
  const Eigen::Index n = a.size();
  if (b.size() != n) throw InvalidArgument("A and B sizes differ");
  if (count != kAllEigenpairs && (count < 1 || count > n))
    throw InvalidArgument("eigenpair count out of range");
  CyclicLdlt check(b);  // throws CholeskyFailure when B is not SPD
  (void)check;
  EigenStats local;
  EigenStats& st = stats ? *stats : local;
  st = {};
  const bool dense = opt.force_dense || count == kAllEigenpairs || n <= 24 || 3 * count > n;
  if (!dense) {
    if (count == 1) {
      EigenSolution sol;
      sol.sigmas = Eigen::VectorXd::Zero(1);
      const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
      sol.vectors = ones / std::sqrt(ones.dot(b * ones));
      return sol;
    }
    EigenSolution sol;
    if (detail::solve_subspace(a, b, count, opt, sol, st)) return sol;
  }
  st.dense = true;
  return detail::solve_dense(a, b, count);
}

/// Second-smallest eigenvalue of (A(D), B) for p = 2 weights.
inline double spectral_gap(const Potential& pot, const Mesh& mesh, const DiffusionVector& d) {
  const Assembly a = assemble(pot, mesh);
  return solve_generalized(stiffness(a, d), a.mass, 2).sigmas[1];
}

}  // namespace optdiff
