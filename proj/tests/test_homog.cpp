#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "optdiff/homog.hpp"

using namespace optdiff;

TEST(Homog, LambertWInvertsXExpX) {
  for (double x : {-0.3, 0.0, 0.1, 1.0, std::exp(1.0), 10.0}) {
    const double w = lambert_w(x);
    EXPECT_NEAR(w * std::exp(w), x, 1e-13 * (1.0 + std::abs(x)));
  }
  EXPECT_NEAR(lambert_w(std::exp(1.0)), 1.0, 1e-14);
  EXPECT_THROW(lambert_w(-1.0), InvalidArgument);
}

TEST(Homog, EtaStarRootAndWeights) {
  const double e = eta_star();
  EXPECT_NEAR(1.0 + std::exp(-e) - e, 0.0, 1e-12);
  EXPECT_NEAR(eta_weight(0.0), 1.0, 1e-15);
  EXPECT_NEAR(eta_weight(e), 0.0, 1e-12);
  EXPECT_GT(eta_weight(0.51), 0.0);
  EXPECT_LT(eta_weight(0.51), 1.0);
  EXPECT_THROW(eta_weight(-0.1), InvalidArgument);
}

TEST(Homog, EtaFitRecoversSyntheticLine) {
  const std::vector<double> al = {1, 2, 3, 4, 5, 6, 7};
  std::vector<double> s2, s3;
  for (double a : al) {
    s2.push_back(20.0);
    s3.push_back(20.0 + (-0.3 / a + 0.7) / a);
  }
  const EtaFit f = estimate_eta(al, s2, s3);
  EXPECT_FALSE(f.zero_regime);
  EXPECT_NEAR(f.eta, 0.7, 1e-12);
  EXPECT_NEAR(f.K, -0.3, 1e-12);
  EXPECT_NEAR(f.residual, 0.0, 1e-12);
  EXPECT_TRUE(f.in_range);
}

TEST(Homog, EtaFitZeroRegimeAndRank) {
  const std::vector<double> al = {1, 2, 3};
  const std::vector<double> s2 = {30, 30, 30}, s3 = {30 + 1e-6, 30 + 2e-6, 30};
  EXPECT_TRUE(estimate_eta(al, s2, s3).zero_regime);
  EXPECT_THROW(estimate_eta({2, 2, 2}, s2, s3), RankDeficient);
  EXPECT_THROW(estimate_eta({1, 2}, s2, s3), InvalidArgument);
}

TEST(Homog, EffectiveDiffusionClosedForms) {
  const Assembly a0 = assemble(Potential::zero(), Mesh(100));
  EXPECT_NEAR(effective_diffusion_1d(a0, Eigen::VectorXd::Ones(100)), 1.0, 1e-14);
  const Potential pot = Potential::sinsin();
  const Assembly a = assemble(pot, Mesh(1000));
  const double z = a.w.mean();
  EXPECT_NEAR(effective_diffusion_1d(a, d_hom_star(a)), 1.0 / z, 1e-12);
  EXPECT_NEAR(effective_diffusion_1d(pot, [&](double q) { return std::exp(pot(q)); }),
              1.0 / partition_constant(pot), 1e-9);
  const Eigen::VectorXd d = d_constant(a);
  EXPECT_NEAR(effective_diffusion_1d(a, 2.5 * d), 2.5 * effective_diffusion_1d(a, d), 1e-12);
  Eigen::VectorXd bad = d;
  bad[4] = 0.0;
  EXPECT_THROW(effective_diffusion_1d(a, bad), DegenerateDiffusion);
}

TEST(Homog, HomogenizedDiffusionMaximizesEffectiveDiffusion) {
  const Assembly a = assemble(Potential::cos_multi(2), Mesh(300));
  const ConstraintSet cs = make_constraints(a, 0.0, 0.0);
  const double best = effective_diffusion_1d(a, d_hom_star(a));
  std::mt19937_64 g(5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd d(a.n);
    for (int i = 0; i < a.n; ++i) d[i] = u(g);
    d /= std::sqrt(cs.pnorm_value(d));
    EXPECT_LE(effective_diffusion_1d(a, d), best + 1e-12);
  }
}

TEST(Homog, AlignPairIsRotationInvariant) {
  const Assembly a = assemble(Potential::zero(), Mesh(64));
  const EigenSolution e = solve_generalized(stiffness(a, Eigen::VectorXd::Ones(64)), a.mass, 3);
  const Eigen::VectorXd u2 = e.vectors.col(1), u3 = e.vectors.col(2);
  Eigen::VectorXd ref(64);
  for (int i = 0; i < 64; ++i) ref[i] = std::cos(2 * std::numbers::pi * (i / 64.0 - 0.1));
  const auto [r2, r3] = align_pair(u2, u3, a.mass, ref);
  const double th = 0.7;
  const auto [s2, s3] =
      align_pair(std::cos(th) * u2 + std::sin(th) * u3, -std::sin(th) * u2 + std::cos(th) * u3, a.mass, ref);
  EXPECT_LT((r2 - s2).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(r2.dot(a.mass * r2), 1.0, 1e-12);
  EXPECT_NEAR(r2.dot(a.mass * r3), 0.0, 1e-12);
  EXPECT_GT(r2.dot(a.mass * ref), 0.0);
}

TEST(Homog, ReconstructionIsNormalized) {
  const Assembly a = assemble(Potential::sinsin(), Mesh(200));
  const EigenSolution e = solve_generalized(stiffness(a, d_hom_star(a)), a.mass, 3);
  const ConstraintSet cs = make_constraints(a, 0.0, 0.0);
  for (double eta : {0.0, 0.51, eta_star()}) {
    const DiffusionVector d = d_star_infty(a, e.vectors.col(1), e.vectors.col(2), eta);
    EXPECT_NEAR(cs.pnorm_value(d), 1.0, 1e-12);
    EXPECT_GE(d.minCoeff(), 0.0);
  }
}

TEST(Homog, SweepAndFitRunEndToEnd) {
  const Assembly a = assemble(Potential::cos_multi(1), Mesh(100));
  const ConstraintSet cs = make_constraints(a, 0.0, 0.0);
  OptimConfig cfg;
  cfg.max_iter = 300;
  const auto sweep = alpha_sweep(a, cs, {1.0, 2.0, 3.0}, cfg);
  ASSERT_EQ(sweep.size(), 3u);
  for (const auto& sp : sweep) EXPECT_GE(sp.report.objective, sp.report.sigma2 - 1e-9);
  const EtaFit f = fit_sweep(sweep);
  EXPECT_EQ(f.alphas.size(), 3u);
  EXPECT_TRUE(std::isfinite(f.eta));
}

TEST(Homog, PeriodizedStudyIsPeriodicAndThreadIndependent) {
  const Potential pot = Potential::sinsin();
  OptimConfig cfg;
  cfg.max_iter = 200;
  const auto r1 = periodized_study(pot, {1, 2}, 2.0, 0.0, 0.0, cfg, 1);
  const auto r2 = periodized_study(pot, {1, 2}, 2.0, 0.0, 0.0, cfg, 2);
  ASSERT_EQ(r1.size(), 2u);
  EXPECT_EQ(r1[1].n_cells, 2 * kCellsPerPeriod);
  EXPECT_LT(r1[1].periodicity_deviation, 1e-2);
  EXPECT_NEAR(r1[0].target, 4 * std::numbers::pi * std::numbers::pi / partition_constant(pot), 1e-9);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(r1[i].sigma2_opt, r2[i].sigma2_opt);
    EXPECT_EQ(r1[i].d_profile, r2[i].d_profile);
  }
}
