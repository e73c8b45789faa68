#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "lrmr/analysis.hpp"
#include "lrmr/spectral_ops.hpp"

namespace {

using lrmr::Matrix;
using lrmr::RegularizerSpec;
using lrmr::Vector;

TEST(ClassifySpectrum, ThresholdAtNu) {
  const auto scad = RegularizerSpec::scad(1.0);  // nu = 3.7
  const auto all_large = lrmr::gen_true_low_rank(6, 6, 3, Vector::Constant(3, 5.0), 1);
  auto c = lrmr::classify_spectrum(all_large, scad);
  EXPECT_EQ(c.r1, 3);
  EXPECT_EQ(c.r2, 0);

  const auto small = lrmr::gen_true_low_rank(6, 6, 2, (Vector(2) << 0.1, 0.05).finished(), 1);
  c = lrmr::classify_spectrum(small, scad);
  EXPECT_EQ(c.r1, 0);
  EXPECT_EQ(c.r2, 2);

  const auto mixed = lrmr::gen_true_low_rank(6, 6, 3, (Vector(3) << 5.0, 3.7, 1.0).finished(), 1);
  c = lrmr::classify_spectrum(mixed, scad);
  EXPECT_EQ(c.j1, (std::vector<int>{0, 1}));
  EXPECT_EQ(c.j2, (std::vector<int>{2}));
  // mu = 1 / 2.7 puts every value in J1.
  EXPECT_EQ(lrmr::classify_spectrum(mixed, scad, lrmr::SpectrumThreshold::Mu).r1, 3);
  EXPECT_EQ(lrmr::classify_spectrum(mixed, RegularizerSpec::nuclear(1.0)).r1, 0);
}

TEST(ConeRatio, HandValues) {
  Matrix d = Matrix::Zero(5, 5);
  d.diagonal() << 4, 3, 2, 1, 0;
  EXPECT_NEAR(lrmr::cone_ratio(d, 1), 3.0 / 7.0, 1e-12);
  EXPECT_EQ(lrmr::cone_ratio(d, 3), 0.0);
  EXPECT_EQ(lrmr::cone_ratio(Matrix::Zero(5, 5), 1), 0.0);
}

class Regime : public ::testing::Test {
 protected:
  lrmr::Dataset data;
  void SetUp() override {
    lrmr::SimulationConfig cfg;
    cfg.d1 = 10;
    cfg.d2 = 10;
    cfg.spectrum = (Vector(4) << 6.0, 5.0, 4.5, 0.5).finished();
    cfg.corruption = lrmr::AdditiveNoise{lrmr::Covariance::identity(100, 0.25)};
    cfg.sigma_eps = 0.5;
    cfg.n = 600;
    data = lrmr::simulate(cfg, 31, 0);
  }
};

TEST_F(Regime, ProjectedGradientIsDominated) {
  const auto pair = lrmr::SurrogatePair::build(data.observations);
  const auto spec = RegularizerSpec::scad(1.0);
  const auto classes = lrmr::classify_spectrum(*data.truth, spec);
  EXPECT_EQ(classes.r1, 3);
  const auto norms = lrmr::measure_gradient_norms(pair, *data.truth, classes);
  EXPECT_FALSE(norms.empty_j1);
  EXPECT_GT(norms.full, 0.0);
  EXPECT_LE(norms.projected, norms.full + 1e-12);

  const auto none = lrmr::classify_spectrum(*data.truth, RegularizerSpec::nuclear(1.0));
  const auto empty = lrmr::measure_gradient_norms(pair, *data.truth, none);
  EXPECT_TRUE(empty.empty_j1);
  EXPECT_EQ(empty.projected, 0.0);
}

TEST_F(Regime, RecoveryReportFields) {
  const auto pair = lrmr::SurrogatePair::build(data.observations);
  const auto spec = RegularizerSpec::scad(1.0);
  const Matrix theta_hat = data.truth->theta + 0.01 * Matrix::Identity(10, 10);
  const auto rep = lrmr::recovery_report(theta_hat, *data.truth, pair, spec);
  EXPECT_NEAR(rep.frob_error, 0.01 * std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(rep.nuclear_error, 0.1, 1e-10);
  EXPECT_EQ(rep.rank_hat, 10);
  EXPECT_EQ(rep.r1 + rep.r2, 4);
  EXPECT_LE(rep.op_norm_proj_grad, rep.op_norm_full_grad);
  EXPECT_NEAR(rep.cone_ratio, 0.25, 1e-10);  // two tail values over eight head values
}

TEST(EvaluateBound, HandValuesAndPrecondition) {
  lrmr::RecoveryReport rep;
  rep.frob_error = 1.0;
  rep.r1 = 4;
  rep.r2 = 1;
  rep.op_norm_proj_grad = 0.5;
  const auto mcp = RegularizerSpec::mcp(0.2, 2.0);  // mu = 0.5
  const auto b = lrmr::evaluate_bound(rep, mcp, 0.5);
  // 2 / 0.5 * 0.5 + 5 / (2 * 0.5) * 0.2
  EXPECT_NEAR(b.rhs, 3.0, 1e-12);
  EXPECT_NEAR(b.ratio, 1.0 / 3.0, 1e-12);
  EXPECT_THROW(lrmr::evaluate_bound(rep, mcp, 0.25), lrmr::ParameterError);
  EXPECT_NEAR(lrmr::default_alpha2(lrmr::Covariance::identity(4, 2.0)), 0.25, 1e-15);
}

TEST(LemmaSuite, NoViolations) {
  const auto report = lrmr::check_lemmas(300, 17);
  ASSERT_EQ(report.checks.size(), 8u);
  for (const auto& c : report.checks) {
    EXPECT_GT(c.trials, 0) << c.name;
    EXPECT_EQ(c.violations, 0) << c.name << " worst " << c.worst;
  }
  EXPECT_TRUE(report.passed());
}

// The penalty bound is not unconditional: spreading a large error over many
// small directions keeps P bounded while the tail nuclear norm grows.
TEST(PenaltyBound, FailsForLargeSpreadError) {
  const auto spec = RegularizerSpec::scad(1.0);
  Matrix star = Matrix::Zero(6, 6);
  star(0, 0) = 2.0;
  Matrix delta = Matrix::Zero(6, 6);
  for (int j = 1; j < 6; ++j) delta(j, j) = 100.0;
  const auto split = lrmr::split_top(delta, 1);
  const double lhs = lrmr::spectral_penalty(star, spec) - lrmr::spectral_penalty(star + delta, spec);
  const double rhs = spec.lambda() * (lrmr::nuclear_norm(split.top) - lrmr::nuclear_norm(split.tail));
  EXPECT_NEAR(lhs, -5 * 2.35, 1e-10);
  EXPECT_NEAR(rhs, -100.0, 1e-10);
  EXPECT_GT(lhs, rhs);
}

TEST(GradientSuite, FiniteDifferences) {
  const auto report = lrmr::check_gradients(4, 5);
  EXPECT_EQ(report.checks.size(), 3u);
  EXPECT_TRUE(report.passed()) << report.checks[0].worst;
}

TEST(WellSeparated, GapsRespected) {
  lrmr::Rng rng(3);
  const auto spec = RegularizerSpec::mcp(1.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    const Vector s = lrmr::singular_values(lrmr::well_separated_matrix(5, 4, spec, 1e-3, rng));
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      EXPECT_GE(s(j), 1e-3);
      EXPECT_GE(std::abs(s(j) - spec.lambda()), 1e-3 - 1e-12);
      EXPECT_GE(std::abs(s(j) - spec.nu()), 1e-3 - 1e-12);
      if (j > 0) EXPECT_GE(s(j - 1) - s(j), 1e-3 - 1e-12);
    }
  }
}

TEST(ProxSuite, Passes) { EXPECT_TRUE(lrmr::check_prox(50, 9).passed()); }

TEST(ConditionSuite, Passes) {
  const auto report = lrmr::check_conditions(20, 4);
  for (const auto& c : report.checks) EXPECT_EQ(c.violations, 0) << c.name;
}

}  // namespace
