#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "optdiff/errors.hpp"
#include "optdiff/fem.hpp"
#include "optdiff/potential.hpp"

namespace optdiff {

/// Box bounds plus the weighted p-norm ball sum_n omega_n d_n^p <= 1.
/// Bounds use V at the left endpoint of each cell, matching the weights.
struct ConstraintSet {
  double p = 2.0;
  double a = 0.0;
  double b = 0.0;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd omega;

  Eigen::Index size() const noexcept { return omega.size(); }

  double pnorm_value(const Eigen::VectorXd& d) const {
    double s = 0.0;
    if (p == 2.0) {
      for (Eigen::Index n = 0; n < d.size(); ++n) s += omega[n] * std::max(d[n], 0.0) * std::max(d[n], 0.0);
    } else {
      for (Eigen::Index n = 0; n < d.size(); ++n) s += omega[n] * std::pow(std::max(d[n], 0.0), p);
    }
    return s;
  }

  /// Largest violation of any constraint (0 when feasible).
  double violation(const Eigen::VectorXd& d) const {
    double v = std::max(0.0, pnorm_value(d) - 1.0);
    for (Eigen::Index n = 0; n < d.size(); ++n) {
      v = std::max(v, lower[n] - d[n]);
      if (std::isfinite(upper[n])) v = std::max(v, d[n] - upper[n]);
    }
    return v;
  }
};

/// Tolerance on sum omega lower^p - 1 below which the set is still considered non-empty.
inline constexpr double kFeasibilitySlack = 1e-10;

inline ConstraintSet make_constraints(const Assembly& asmb, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw InvalidArgument("bounds a and b must be >= 0");
  ConstraintSet cs;
  cs.p = asmb.p;
  cs.a = a;
  cs.b = b;
  cs.omega = asmb.omega;
  cs.lower.resize(asmb.n);
  cs.upper.resize(asmb.n);
  for (int n = 0; n < asmb.n; ++n) {
    const double ev = std::exp(asmb.v_left[n]);
    cs.lower[n] = a * ev;
    cs.upper[n] = b > 0.0 ? ev / b : std::numeric_limits<double>::infinity();
    if (cs.lower[n] > cs.upper[n])
      throw InfeasibleSet("lower bound exceeds upper bound (a*b > 1)");
  }
  const double lp = cs.pnorm_value(cs.lower);
  if (lp > 1.0 + kFeasibilitySlack)
    throw InfeasibleSet("lower bound violates the p-norm constraint (sum omega lower^p = " +
                        std::to_string(lp) + ")");
  return cs;
}

namespace detail {

// Solves x + lam p x^{p-1} = y for x >= 0 (y > 0, lam >= 0).
inline double kkt_component(double y, double lam, double p) {
  if (y <= 0.0) return 0.0;
  if (lam == 0.0) return y;
  if (p == 2.0) return y / (1.0 + 2.0 * lam);
  if (p == 1.0) return std::max(0.0, y - lam);
  double lo = 0.0, hi = y;
  double x = p > 2.0 ? std::min(y, std::pow(y / (lam * p), 1.0 / (p - 1.0))) : 0.5 * y;
  for (int it = 0; it < 100; ++it) {
    const double f = x + lam * p * std::pow(x, p - 1.0) - y;
    if (f > 0.0) hi = x; else lo = x;
    const double df = 1.0 + lam * p * (p - 1.0) * std::pow(x, p - 2.0);
    double xn = x - f / df;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    if (std::abs(xn - x) <= 1e-16 * std::max(1.0, x) || hi - lo <= 1e-16 * hi) return xn;
    x = xn;
  }
  return x;
}

inline double clip(double x, double lo, double up) { return std::min(std::max(x, lo), up); }

}  // namespace detail

/// Projection onto the constraint set in the omega-weighted metric
/// sum_n omega_n (x_n - y_n)^2. The KKT system is separable given the
/// multiplier of the p-norm constraint, found by bracketed false position.
inline Eigen::VectorXd project(const Eigen::VectorXd& y, const ConstraintSet& cs) {
  if (y.size() != cs.size()) throw InvalidArgument("vector length does not match constraint set");
  if (!y.allFinite()) throw InvalidArgument("cannot project a non-finite vector");
  const Eigen::Index n = y.size();
  auto point = [&](double lam) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i)
      x[i] = detail::clip(detail::kkt_component(y[i], lam, cs.p), cs.lower[i], cs.upper[i]);
    return x;
  };
  Eigen::VectorXd x0 = point(0.0);
  if (cs.pnorm_value(x0) <= 1.0) return x0;
  const double lower_value = cs.pnorm_value(cs.lower);
  if (lower_value >= 1.0) return cs.lower;  // the ball touches the set only at the lower bound
  double lo = 0.0, hi = 1.0;
  Eigen::VectorXd xh = point(hi);
  while (cs.pnorm_value(xh) > 1.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return cs.lower;
    xh = point(hi);
  }
  // Illinois false position on g(lam) = sum omega x(lam)^p - 1, decreasing in lam
  double glo = cs.pnorm_value(point(lo)) - 1.0, ghi = cs.pnorm_value(xh) - 1.0;
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double mid = (lo * ghi - hi * glo) / (ghi - glo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    Eigen::VectorXd xm = point(mid);
    const double gm = cs.pnorm_value(xm) - 1.0;
    if (gm > 0.0) {
      lo = mid;
      glo = gm;
      if (side == -1) ghi *= 0.5;
      side = -1;
    } else {
      hi = mid;
      ghi = gm;
      xh = std::move(xm);
      if (gm == 0.0) break;
      if (side == 1) glo *= 0.5;
      side = 1;
    }
    if (hi - lo <= 1e-15 * hi || -ghi <= 1e-15) break;
  }
  return xh;
}

enum class InitKind { HomProxy, Constant, Given };

struct OptimConfig {
  int max_iter = 1000;
  /// Threshold on the omega-norm of the projected-gradient step divided by the step size.
  double grad_tol = 1e-15;
  /// Stop once the predicted increase of a step falls below this fraction of the objective.
  double precision_tol = 1e-13;
  double step0 = 1.0;
  double shrink = 0.5;
  double slope = 1e-4;
  double step_max = 1e6;
  double alpha = 0.0;  // smooth-min parameter, > 0 enables F_alpha
  InitKind init = InitKind::HomProxy;
  std::optional<Eigen::VectorXd> init_vector;
  /// Relative width of the eigenvalue cluster treated jointly by the spectral-gap ascent.
  double cluster_width = 0.25;
  int cluster_max = 4;
};

struct ConstraintActivity {
  bool pnorm_saturated = false;
  int n_lower_active = 0;
  int n_upper_active = 0;
};

struct OptimReport {
  Eigen::VectorXd d_star;
  double objective = 0.0;
  double sigma2 = 0.0, sigma3 = 0.0, sigma4 = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  ConstraintActivity constraint_activity;
  double min_d = 0.0;
  double alpha = 0.0;
  EigenSolution eig;  // lowest eigenpairs at d_star
  std::vector<double> history;
};

/// Cell formula for the derivative of sigma_2: g_n = s_n (U_{n+1} - U_n)^2.
inline Eigen::VectorXd grad_sigma2(const Assembly& a, const Eigen::VectorXd& u2) {
  const Eigen::MatrixXd du = cell_differences(u2);
  return a.s.cwiseProduct(du.col(0).cwiseAbs2());
}

inline ConstraintActivity constraint_activity(const Eigen::VectorXd& d, const ConstraintSet& cs,
                                              double tol = 1e-9) {
  ConstraintActivity act;
  act.pnorm_saturated = std::abs(cs.pnorm_value(d) - 1.0) <= tol;
  for (Eigen::Index n = 0; n < d.size(); ++n) {
    if (d[n] <= cs.lower[n] + tol * std::max(1.0, cs.lower[n])) ++act.n_lower_active;
    if (std::isfinite(cs.upper[n]) && d[n] >= cs.upper[n] - tol * std::max(1.0, cs.upper[n]))
      ++act.n_upper_active;
  }
  return act;
}

inline Eigen::VectorXd d_hom_vector(const Assembly& a) { return a.v_left.array().exp(); }

inline Eigen::VectorXd d_constant_vector(const Assembly& a) {
  return Eigen::VectorXd::Constant(a.n, std::pow(a.omega.sum(), -1.0 / a.p));
}

namespace detail {

inline Eigen::VectorXd initial_point(const Assembly& a, const ConstraintSet& cs, const OptimConfig& cfg) {
  Eigen::VectorXd d;
  switch (cfg.init) {
    case InitKind::HomProxy: {
      d = d_hom_vector(a);
      // e^V saturates the p = 2 ball; rescale for other p
      if (a.p != 2.0) d *= std::pow(cs.pnorm_value(d), -1.0 / a.p);
      break;
    }
    case InitKind::Constant: d = d_constant_vector(a); break;
    case InitKind::Given:
      if (!cfg.init_vector || cfg.init_vector->size() != a.n)
        throw InvalidArgument("initial vector missing or of wrong length");
      d = *cfg.init_vector;
      break;
  }
  if (cs.violation(d) > 0.0) d = project(d, cs);
  return d;
}

// Projection of a symmetric matrix onto {Y PSD, trace Y = 1}.
inline Eigen::MatrixXd project_spectraplex(const Eigen::MatrixXd& y) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (y + y.transpose()));
  Eigen::VectorXd l = es.eigenvalues();
  std::vector<double> u(l.data(), l.data() + l.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    css += u[k];
    const double t = (css - 1.0) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) theta = t;
  }
  for (Eigen::Index i = 0; i < l.size(); ++i) l[i] = std::max(l[i] - theta, 0.0);
  return es.eigenvectors() * l.asDiagonal() * es.eigenvectors().transpose();
}

struct ProxStep {
  Eigen::VectorXd h;
  double model = 0.0;  // lambda_min of the first-order cluster model at d + h
  double bound = 0.0;  // dual value, an upper bound on the proximal objective
};

// Maximizes  P(h) = lambda_min(S + M(h)) - |h|_W^2 / (2t)  over D + h in the constraint set, where
// S = diag(cluster eigenvalues) and M(h)_ij = sum_n h_n s_n dU_i dU_j is the first-order
// variation of the cluster block. Solved through its dual over the spectraplex, stopping on the
// duality gap (small against the predicted increase over f, or at rounding level); the best
// primal point seen is returned.
inline ProxStep cluster_prox_step(const Eigen::VectorXd& d, const Eigen::VectorXd& sig,
                                  const Eigen::MatrixXd& du, const Eigen::VectorXd& s,
                                  const ConstraintSet& cs, double t, double f) {
  const Eigen::Index m = sig.size();
  const Eigen::VectorXd& w = cs.omega;
  const Eigen::MatrixXd sdu = s.asDiagonal() * du;  // s_n dU_{n,i}

  auto gy_of = [&](const Eigen::MatrixXd& y) {
    // G(Y)_n = s_n dU_n^T Y dU_n
    return Eigen::VectorXd(((sdu * y).cwiseProduct(du)).rowwise().sum());
  };
  auto model_of = [&](const Eigen::VectorXd& h) {
    Eigen::MatrixXd mm = du.transpose() * h.cwiseProduct(s).asDiagonal() * du;
    mm = 0.5 * (mm + mm.transpose());
    mm.diagonal() += sig;
    return mm;
  };
  auto lmin = [](const Eigen::MatrixXd& mm) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mm, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
  };
  struct Eval {
    double val;
    Eigen::MatrixXd grad;
    Eigen::VectorXd h;
  };
  auto phi = [&](const Eigen::MatrixXd& y) {
    const Eigen::VectorXd gy = gy_of(y);
    Eigen::VectorXd h = project(d + t * gy.cwiseQuotient(w), cs) - d;
    const double val = y.diagonal().dot(sig) + gy.dot(h) - w.dot(h.cwiseAbs2()) / (2.0 * t);
    return Eval{val, model_of(h), std::move(h)};
  };

  Eigen::MatrixXd y = Eigen::MatrixXd::Identity(m, m) / static_cast<double>(m);
  Eval cur = phi(y);
  ProxStep best{cur.h, lmin(cur.grad), cur.val};
  double best_primal = best.model - w.dot(cur.h.cwiseAbs2()) / (2.0 * t);
  const double scale = std::max(1.0, std::abs(sig[0]));
  double lip = 1.0;
  for (int it = 0; it < 500 && m > 1; ++it) {
    const double gap = best.bound - best_primal;
    if (gap <= 1e-13 * scale || gap <= 0.1 * (best_primal - f)) break;
    Eigen::MatrixXd yn;
    Eval nxt;
    for (int bt = 0; bt < 60; ++bt) {
      yn = project_spectraplex(y - cur.grad / lip);
      nxt = phi(yn);
      const Eigen::MatrixXd dy = yn - y;
      if (nxt.val <= cur.val + cur.grad.cwiseProduct(dy).sum() + 0.5 * lip * dy.squaredNorm() + 1e-13 * scale)
        break;
      lip *= 2.0;
    }
    y = std::move(yn);
    cur = std::move(nxt);
    const double mod = lmin(cur.grad);
    const double primal = mod - w.dot(cur.h.cwiseAbs2()) / (2.0 * t);
    if (primal > best_primal) {
      best_primal = primal;
      best.h = cur.h;
      best.model = mod;
    }
    best.bound = std::min(best.bound, cur.val);
    lip = std::max(lip / 1.5, 1e-12);
  }
  return best;
}

inline EigenSolution solve_at(const Assembly& a, const Eigen::VectorXd& d, int count,
                              const EigenSolution* warm) {
  EigenOptions opt;
  if (warm) opt.warm = &warm->vectors;
  return solve_generalized(stiffness(a, d), a.mass, std::min<int>(count, a.n), opt);
}

inline void finish_report(OptimReport& r, const Assembly& a, const ConstraintSet& cs) {
  const EigenSolution& e = r.eig;
  r.sigma2 = e.sigmas.size() > 1 ? e.sigmas[1] : 0.0;
  r.sigma3 = e.sigmas.size() > 2 ? e.sigmas[2] : 0.0;
  r.sigma4 = e.sigmas.size() > 3 ? e.sigmas[3] : 0.0;
  r.min_d = r.d_star.minCoeff();
  r.constraint_activity = constraint_activity(r.d_star, cs);
  (void)a;
}

}  // namespace detail

/// Projected ascent on sigma_2 over the constraint set.
///
/// Each step solves a proximal subproblem on the first-order model of the
/// lowest nonzero eigenvalue cluster (sigma_2 plus eigenvalues within
/// `cluster_width` of it), so that steps remain ascent directions where
/// sigma_2 is degenerate. The step size follows an Armijo-type rule on the
/// predicted model increase.
inline OptimReport maximize_spectral_gap(const Assembly& a, const ConstraintSet& cs,
                                         const OptimConfig& cfg = {}) {
  if (cfg.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  const int nev = std::min(a.n, cfg.cluster_max + 3);
  Eigen::VectorXd d = detail::initial_point(a, cs, cfg);
  EigenSolution eig = detail::solve_at(a, d, nev, nullptr);
  double f = eig.sigmas[1];
  double t = cfg.step0;
  OptimReport rep;
  rep.history.push_back(f);
  rep.stop_reason = "max_iter";
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    int m = 2;
    while (m < cfg.cluster_max && 1 + m < eig.sigmas.size() &&
           eig.sigmas[1 + m] - f <= cfg.cluster_width * f)
      ++m;
    const Eigen::VectorXd sig = eig.sigmas.segment(1, m);
    const Eigen::MatrixXd du = cell_differences(eig.vectors.middleCols(1, m));
    t = std::min(2.0 * t, cfg.step_max);
    bool accepted = false;
    bool stop = false;
    detail::ProxStep st;
    while (true) {
      st = detail::cluster_prox_step(d, sig, du, a.s, cs, t, f);
      const double pred = st.model - f;
      if (st.bound - f <= cfg.precision_tol * std::abs(f)) {
        rep.stop_reason = "predicted increase below precision";
        rep.converged = true;
        stop = true;
        break;
      }
      if (pred <= 0.0) {
        // inexact subproblem: retry with a shorter, better conditioned step
        t *= cfg.shrink;
        if (t < 1e-300) {
          rep.stop_reason = "step size underflow";
          stop = true;
          break;
        }
        continue;
      }
      Eigen::VectorXd dn = d + st.h;
      EigenSolution en = detail::solve_at(a, dn, nev, &eig);
      if (en.sigmas[1] - f >= cfg.slope * pred) {
        d = std::move(dn);
        eig = std::move(en);
        f = eig.sigmas[1];
        accepted = true;
        break;
      }
      t *= cfg.shrink;
      if (t < 1e-300) {
        rep.stop_reason = "step size underflow";
        stop = true;
        break;
      }
    }
    if (stop) break;
    if (accepted) {
      rep.history.push_back(f);
      const double stat = std::sqrt(cs.omega.cwiseProduct(st.h.cwiseAbs2()).sum()) / t;
      if (stat <= cfg.grad_tol) {
        rep.stop_reason = "projected gradient below tolerance";
        rep.converged = true;
        ++it;
        break;
      }
    }
  }
  rep.iterations = it;
  rep.d_star = d;
  rep.objective = f;
  rep.eig = std::move(eig);
  rep.alpha = 0.0;
  detail::finish_report(rep, a, cs);
  return rep;
}

/// Value and gradient of the smooth-min surrogate.
struct SmoothMinValue {
  double value = 0.0;
  Eigen::VectorXd grad;
  int n_terms = 0;  // number of eigenvalues sigma_2.. that entered the sums
};

/// Exponent range kept in the truncated sums: terms with alpha (sigma_i - sigma_2)
/// beyond this contribute below e^{-45} relative and are dropped.
inline constexpr double kSmoothMinCutoff = 45.0;

/// F_alpha = H/G with G = sum_{i>=2} e^{-alpha sigma_i}, H = sum_{i>=2} sigma_i e^{-alpha sigma_i},
/// evaluated from the supplied eigenpairs (column 0 is the constant mode).
inline SmoothMinValue smoothmin_value_and_grad(const Assembly& a, const EigenSolution& eig, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
  const Eigen::Index k = eig.sigmas.size();
  if (k < 2) throw InvalidArgument("smooth-min needs at least two eigenpairs");
  const double s2 = eig.sigmas[1];
  Eigen::Index last = 1;
  while (last + 1 < k && alpha * (eig.sigmas[last + 1] - s2) < kSmoothMinCutoff) ++last;
  const Eigen::Index cnt = last;  // indices 1..last
  Eigen::VectorXd e(cnt);
  for (Eigen::Index i = 0; i < cnt; ++i) e[i] = std::exp(-alpha * (eig.sigmas[1 + i] - s2));
  const double g = e.sum();
  const Eigen::VectorXd sig = eig.sigmas.segment(1, cnt);
  const double h = sig.dot(e);
  SmoothMinValue out;
  out.value = h / g;
  out.n_terms = static_cast<int>(cnt);
  Eigen::VectorXd coef(cnt);
  for (Eigen::Index i = 0; i < cnt; ++i) coef[i] = e[i] * (1.0 - alpha * (sig[i] - out.value)) / g;
  const Eigen::MatrixXd du = cell_differences(eig.vectors.middleCols(1, cnt));
  out.grad = a.s.cwiseProduct(du.cwiseAbs2() * coef);
  return out;
}

namespace detail {

// Eigenpairs reaching at least kSmoothMinCutoff/alpha above sigma_2 (or the full spectrum).
inline EigenSolution smoothmin_spectrum(const Assembly& a, const Eigen::VectorXd& d, double alpha,
                                        int& count, const EigenSolution* warm) {
  while (true) {
    if (3 * count > a.n) {
      count = a.n;
      return solve_generalized(stiffness(a, d), a.mass, kAllEigenpairs);
    }
    EigenSolution e = solve_at(a, d, count, warm);
    if (alpha * (e.sigmas[count - 1] - e.sigmas[1]) >= kSmoothMinCutoff) return e;
    count *= 2;
  }
}

}  // namespace detail

/// Full-spectrum smooth-min value at d (reference implementation using every eigenpair).
inline double smoothmin_full(const Assembly& a, const Eigen::VectorXd& d, double alpha) {
  EigenSolution e = solve_generalized(stiffness(a, d), a.mass, kAllEigenpairs);
  const double s2 = e.sigmas[1];
  double g = 0.0, h = 0.0;
  for (Eigen::Index i = 1; i < e.sigmas.size(); ++i) {
    const double w = std::exp(-alpha * (e.sigmas[i] - s2));
    g += w;
    h += e.sigmas[i] * w;
  }
  return h / g;
}

/// Projected gradient ascent on F_alpha in the omega metric with Armijo backtracking.
inline OptimReport maximize_smoothmin(const Assembly& a, const ConstraintSet& cs, const OptimConfig& cfg) {
  if (!(cfg.alpha > 0.0)) throw InvalidArgument("smooth-min needs alpha > 0");
  if (cfg.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  const double alpha = cfg.alpha;
  Eigen::VectorXd d = detail::initial_point(a, cs, cfg);
  int count = std::min(a.n, 8);
  EigenSolution eig = detail::smoothmin_spectrum(a, d, alpha, count, nullptr);
  SmoothMinValue fv = smoothmin_value_and_grad(a, eig, alpha);
  double t = cfg.step0;
  OptimReport rep;
  rep.history.push_back(fv.value);
  rep.stop_reason = "max_iter";
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    t = std::min(2.0 * t, cfg.step_max);
    bool stop = false;
    Eigen::VectorXd h;
    while (true) {
      h = project(d + t * fv.grad.cwiseQuotient(cs.omega), cs) - d;
      const double pred = fv.grad.dot(h);
      if (pred <= cfg.precision_tol * std::abs(fv.value)) {
        rep.stop_reason = "predicted increase below precision";
        rep.converged = true;
        stop = true;
        break;
      }
      Eigen::VectorXd dn = d + h;
      int cn = count;
      EigenSolution en = detail::smoothmin_spectrum(a, dn, alpha, cn, &eig);
      SmoothMinValue fn = smoothmin_value_and_grad(a, en, alpha);
      if (fn.value >= fv.value + cfg.slope * pred) {
        d = std::move(dn);
        eig = std::move(en);
        fv = std::move(fn);
        count = cn;
        break;
      }
      t *= cfg.shrink;
      if (t < 1e-300) {
        rep.stop_reason = "step size underflow";
        stop = true;
        break;
      }
    }
    if (stop) break;
    rep.history.push_back(fv.value);
    const double stat = std::sqrt(cs.omega.cwiseProduct(h.cwiseAbs2()).sum()) / t;
    if (stat <= cfg.grad_tol) {
      rep.stop_reason = "projected gradient below tolerance";
      rep.converged = true;
      ++it;
      break;
    }
  }
  rep.iterations = it;
  rep.d_star = d;
  rep.objective = fv.value;
  rep.alpha = alpha;
  rep.eig = std::move(eig);
  detail::finish_report(rep, a, cs);
  return rep;
}

/// Dispatches on cfg.alpha (> 0 selects the smooth-min objective).
inline OptimReport optimize(const Assembly& a, const ConstraintSet& cs, const OptimConfig& cfg) {
  return cfg.alpha > 0.0 ? maximize_smoothmin(a, cs, cfg) : maximize_spectral_gap(a, cs, cfg);
}

}  // namespace optdiff
