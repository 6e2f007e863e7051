#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "optdiff/errors.hpp"
#include "optdiff/fem.hpp"
#include "optdiff/optimize.hpp"
#include "optdiff/parallel.hpp"
#include "optdiff/potential.hpp"

namespace optdiff {

/// d_n = e^{V(q_n)} at the cell left endpoints.
inline DiffusionVector d_hom_star(const Assembly& a) { return d_hom_vector(a); }

/// Constant diffusion gamma * 1 with gamma = (sum_n omega_{p,n})^{-1/p}.
inline DiffusionVector d_constant(const Assembly& a) { return d_constant_vector(a); }

/// Effective diffusion of a piecewise-constant coefficient:
/// (sum e^{-V_n}/N)^{-1} (sum e^{V_n}/(N d_n))^{-1}, with V at the cell left endpoints.
inline double effective_diffusion_1d(const Assembly& a, const DiffusionVector& d) {
  if (d.size() != a.n) throw InvalidArgument("diffusion vector length does not match mesh");
  double z = 0.0, h = 0.0;
  for (int n = 0; n < a.n; ++n) {
    if (!(d[n] > 0.0)) throw DegenerateDiffusion("effective diffusion needs d > 0 in every cell");
    z += a.w[n];
    h += 1.0 / (a.w[n] * d[n]);
  }
  z /= a.n;
  h /= a.n;
  return 1.0 / (z * h);
}

/// Midpoint-rule version for a coefficient given as a function of q.
inline double effective_diffusion_1d(const Potential& pot, const std::function<double(double)>& d,
                                     int n_quad = 100000) {
  if (n_quad < 2) throw InvalidArgument("n_quad must be >= 2");
  double z = 0.0, h = 0.0;
  for (int i = 0; i < n_quad; ++i) {
    const double q = (i + 0.5) / n_quad;
    const double dv = d(q);
    if (!(dv > 0.0)) throw DegenerateDiffusion("effective diffusion needs d > 0 everywhere");
    const double v = pot(q);
    z += std::exp(-v);
    h += std::exp(v) / dv;
  }
  return static_cast<double>(n_quad) * n_quad / (z * h);
}

/// Principal branch of the Lambert W function for x >= -1/e (Newton from w = 0.25).
inline double lambert_w(double x) {
  if (x < -std::exp(-1.0)) throw InvalidArgument("lambert_w needs x >= -1/e");
  double w = 0.25;
  for (int it = 0; it < 40; ++it) {
    const double ew = std::exp(w);
    const double dw = (w * ew - x) / (ew * (1.0 + w));
    w -= dw;
    if (std::abs(dw) <= 1e-14) break;
  }
  return w;
}

/// eta* = 1 + W(1/e), the root of 1 + e^{-eta} - eta.
inline double eta_star() { return 1.0 + lambert_w(std::exp(-1.0)); }

/// c(eta) = e^{-eta}(1 + e^{-eta} - eta) / (1 + e^{-eta} + eta e^{-eta}).
inline double eta_weight(double eta) {
  if (!(eta >= 0.0)) throw InvalidArgument("eta must be >= 0");
  const double e = std::exp(-eta);
  return e * (1.0 + e - eta) / (1.0 + e + eta * e);
}

struct EtaFit {
  std::vector<double> alphas;
  std::vector<double> gaps3minus2;  // alpha (sigma3 - sigma2)
  double K = 0.0;
  double eta = 0.0;
  double residual = 0.0;
  bool zero_regime = false;  // every scaled gap below the detection threshold
  bool in_range = true;      // eta within [-0.1, eta* + 0.1]
};

inline constexpr double kEtaZeroThreshold = 1e-4;

/// Least-squares fit of alpha (sigma3 - sigma2) by K/alpha + eta.
inline EtaFit estimate_eta(const std::vector<double>& alphas, const std::vector<double>& sigma2s,
                           const std::vector<double>& sigma3s) {
  const std::size_t n = alphas.size();
  if (sigma2s.size() != n || sigma3s.size() != n) throw InvalidArgument("eta fit inputs differ in length");
  EtaFit fit;
  fit.alphas = alphas;
  for (std::size_t i = 0; i < n; ++i) fit.gaps3minus2.push_back(alphas[i] * (sigma3s[i] - sigma2s[i]));
  std::vector<double> distinct = alphas;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) throw RankDeficient("eta fit needs at least two distinct alpha values");
  if (std::all_of(fit.gaps3minus2.begin(), fit.gaps3minus2.end(),
                  [](double g) { return std::abs(g) <= kEtaZeroThreshold; })) {
    fit.zero_regime = true;
    double rss = 0.0;
    for (double g : fit.gaps3minus2) rss += g * g;
    fit.residual = std::sqrt(rss / static_cast<double>(n));
    return fit;
  }
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = 1.0 / alphas[i];
    x(i, 1) = 1.0;
    y[i] = fit.gaps3minus2[i];
  }
  const Eigen::Vector2d beta = x.colPivHouseholderQr().solve(y);
  fit.K = beta[0];
  fit.eta = beta[1];
  fit.residual = std::sqrt((x * beta - y).squaredNorm() / static_cast<double>(n));
  fit.in_range = fit.eta >= -0.1 && fit.eta <= eta_star() + 0.1;
  return fit;
}

/// Rotates a B-orthonormal pair (u2, u3) within its span so that u2 points along the
/// B-projection of `reference` onto the span.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> align_pair(const Eigen::VectorXd& u2, const Eigen::VectorXd& u3,
                                                              const CyclicTridiag& b,
                                                              const Eigen::VectorXd& reference) {
  const Eigen::VectorXd br = b * reference;
  const double c2 = u2.dot(br), c3 = u3.dot(br);
  const double r = std::hypot(c2, c3);
  if (r == 0.0) return {u2, u3};
  return {(c2 * u2 + c3 * u3) / r, (-c3 * u2 + c2 * u3) / r};
}

/// D_n = gamma e^{V_n} (|dU2_n|^2 + c(eta) |dU3_n|^2)^{1/(p-1)}, normalized to sum omega D^p = 1.
inline DiffusionVector d_star_infty(const Assembly& a, const Eigen::VectorXd& u2, const Eigen::VectorXd& u3,
                                    double eta) {
  if (!(a.p > 1.0)) throw InvalidArgument("the reconstruction needs p > 1");
  Eigen::MatrixXd u(a.n, 2);
  u.col(0) = u2;
  u.col(1) = u3;
  const Eigen::MatrixXd du = cell_differences(u);
  const double c = eta_weight(eta);
  DiffusionVector d(a.n);
  for (int n = 0; n < a.n; ++n)
    d[n] = std::exp(a.v_left[n]) *
           std::pow(du(n, 0) * du(n, 0) + c * du(n, 1) * du(n, 1), 1.0 / (a.p - 1.0));
  double norm = 0.0;
  for (int n = 0; n < a.n; ++n) norm += a.omega[n] * std::pow(d[n], a.p);
  return d * std::pow(norm, -1.0 / a.p);
}

struct SweepPoint {
  double alpha = 0.0;
  OptimReport report;
};

/// Smooth-min optima over an alpha grid. Each run starts from the optimum of the
/// previous alpha (the first from cfg's initial point).
inline std::vector<SweepPoint> alpha_sweep(const Assembly& a, const ConstraintSet& cs,
                                           const std::vector<double>& alphas, OptimConfig cfg) {
  std::vector<SweepPoint> out;
  for (double al : alphas) {
    cfg.alpha = al;
    SweepPoint sp{al, maximize_smoothmin(a, cs, cfg)};
    cfg.init = InitKind::Given;
    cfg.init_vector = sp.report.d_star;
    out.push_back(std::move(sp));
  }
  return out;
}

inline EtaFit fit_sweep(const std::vector<SweepPoint>& sweep) {
  std::vector<double> al, s2, s3;
  for (const auto& sp : sweep) {
    al.push_back(sp.alpha);
    s2.push_back(sp.report.sigma2);
    s3.push_back(sp.report.sigma3);
  }
  return estimate_eta(al, s2, s3);
}

struct PeriodizedRecord {
  int k = 0;
  int n_cells = 0;
  double sigma2_opt = 0.0;
  double target = 0.0;              // 4 pi^2 / Z
  Eigen::VectorXd d_profile;        // optimum on [0, 1/k], one value per cell
  Eigen::VectorXd q_profile;        // cell left endpoints stretched to [0, 1)
  double periodicity_deviation = 0; // max_n |d_n - d_{n + N/k}| / |d|_inf
  double hom_deviation = 0;         // max |profile - e^V| / |e^V|_inf on the first period
  OptimReport report;
};

inline constexpr int kCellsPerPeriod = 200;

/// Optimizes sigma_2 for V(kq) on N = 200k cells for each k and compares with 4 pi^2 / Z.
inline std::vector<PeriodizedRecord> periodized_study(const Potential& pot, const std::vector<int>& k_list,
                                                      double p, double a_bound, double b_bound,
                                                      const OptimConfig& cfg = {}, int threads = 1) {
  const double z = partition_constant(pot.with_frequency(1), 100000);
  const double target = 4.0 * std::numbers::pi * std::numbers::pi / z;
  return parallel_map<PeriodizedRecord>(k_list.size(), threads, [&](std::size_t idx) {
    const int k = k_list[idx];
    if (k < 1) throw InvalidArgument("periodization frequency must be >= 1");
    const Potential pk = pot.with_frequency(k);
    const int n = kCellsPerPeriod * k;
    const Assembly asmb = assemble(pk, Mesh(n), p);
    const ConstraintSet cs = make_constraints(asmb, a_bound, b_bound);
    PeriodizedRecord rec;
    rec.k = k;
    rec.n_cells = n;
    rec.target = target;
    rec.report = maximize_spectral_gap(asmb, cs, cfg);
    rec.sigma2_opt = rec.report.sigma2;
    const Eigen::VectorXd& d = rec.report.d_star;
    const double dmax = d.cwiseAbs().maxCoeff();
    double dev = 0.0;
    for (int c = 0; c < n; ++c) dev = std::max(dev, std::abs(d[c] - d[(c + kCellsPerPeriod) % n]));
    rec.periodicity_deviation = dev / dmax;
    rec.d_profile = d.head(kCellsPerPeriod);
    rec.q_profile.resize(kCellsPerPeriod);
    const Eigen::VectorXd dh = d_hom_star(asmb).head(kCellsPerPeriod);
    for (int c = 0; c < kCellsPerPeriod; ++c) rec.q_profile[c] = static_cast<double>(c) / kCellsPerPeriod;
    rec.hom_deviation = (rec.d_profile - dh).cwiseAbs().maxCoeff() / dh.cwiseAbs().maxCoeff();
    return rec;
  });
}

}  // namespace optdiff
