#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "optdiff/errors.hpp"

namespace optdiff {

/// Symmetric cyclic tridiagonal matrix. `off[i]` couples rows i and (i+1) mod n.
struct CyclicTridiag {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;

  CyclicTridiag() = default;
  explicit CyclicTridiag(Eigen::Index n) : diag(Eigen::VectorXd::Zero(n)), off(Eigen::VectorXd::Zero(n)) {}

  Eigen::Index size() const noexcept { return diag.size(); }

  /// y = M x (x may have several columns).
  template <typename Derived>
  Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> operator*(
      const Eigen::MatrixBase<Derived>& x) const {
    const Eigen::Index n = size();
    Eigen::Matrix<double, Eigen::Dynamic, Derived::ColsAtCompileTime> y(n, x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index ip = i + 1 == n ? 0 : i + 1;
        const Eigen::Index im = i == 0 ? n - 1 : i - 1;
        y(i, c) = diag[i] * x(i, c) + off[i] * x(ip, c) + off[im] * x(im, c);
      }
    }
    return y;
  }

  Eigen::MatrixXd to_dense() const {
    const Eigen::Index n = size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index ip = (i + 1) % n;
      m(i, i) += diag[i];
      m(i, ip) += off[i];
      m(ip, i) += off[i];
    }
    return m;
  }

  CyclicTridiag& axpy(double t, const CyclicTridiag& other) {
    diag += t * other.diag;
    off += t * other.off;
    return *this;
  }
};

/// LDL^T factorization of an SPD cyclic tridiagonal matrix, bordered on the last row.
/// The leading (n-1)x(n-1) block is an ordinary tridiagonal matrix; the last
/// unknown is eliminated through its Schur complement.
class CyclicLdlt {
 public:
  explicit CyclicLdlt(const CyclicTridiag& m) { factor(m); }

  double schur() const noexcept { return s_; }

  /// Solves M x = r column by column, in place.
  void solve_in_place(Eigen::MatrixXd& r) const {
    const Eigen::Index n = n_;
    for (Eigen::Index c = 0; c < r.cols(); ++c) {
      auto col = r.col(c);
      const double rho = col[n - 1];
      Eigen::VectorXd y = col.head(n - 1);
      tri_solve(y);
      const double xl = (rho - (c0_ * y[0] + cl_ * y[n - 2])) / s_;
      col.head(n - 1) = y - z_ * xl;
      col[n - 1] = xl;
    }
  }

 private:
  void factor(const CyclicTridiag& m) {
    n_ = m.size();
    if (n_ < 3) throw InvalidArgument("cyclic tridiagonal matrices need n >= 3");
    const Eigen::Index k = n_ - 1;
    d_.resize(k);
    l_.resize(k);
    d_[0] = m.diag[0];
    if (!(d_[0] > 0.0)) throw CholeskyFailure("non-positive pivot in cyclic LDL^T");
    for (Eigen::Index i = 1; i < k; ++i) {
      l_[i - 1] = m.off[i - 1] / d_[i - 1];
      d_[i] = m.diag[i] - l_[i - 1] * m.off[i - 1];
      if (!(d_[i] > 0.0)) throw CholeskyFailure("non-positive pivot in cyclic LDL^T");
    }
    // border column couples the last unknown to rows 0 and n-2
    c0_ = m.off[n_ - 1];
    cl_ = m.off[n_ - 2];
    z_ = Eigen::VectorXd::Zero(k);
    z_[0] = c0_;
    z_[k - 1] += cl_;
    tri_solve(z_);
    s_ = m.diag[n_ - 1] - (c0_ * z_[0] + cl_ * z_[k - 1]);
    if (!(s_ > 0.0)) throw CholeskyFailure("non-positive Schur complement in cyclic LDL^T");
  }

  void tri_solve(Eigen::VectorXd& y) const {
    const Eigen::Index k = n_ - 1;
    for (Eigen::Index i = 1; i < k; ++i) y[i] -= l_[i - 1] * y[i - 1];
    for (Eigen::Index i = 0; i < k; ++i) y[i] /= d_[i];
    for (Eigen::Index i = k - 2; i >= 0; --i) y[i] -= l_[i] * y[i + 1];
  }

  Eigen::Index n_ = 0;
  Eigen::VectorXd d_, l_, z_;
  double c0_ = 0.0, cl_ = 0.0, s_ = 0.0;
};

}  // namespace optdiff
