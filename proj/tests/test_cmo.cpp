#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "calibre/cmo.hpp"
#include "calibre/error.hpp"
#include "calibre/metrics.hpp"
#include "oracles.hpp"

namespace calibre {
namespace {

const KernelConfig kCombined{KernelFamily::combined, Bandwidth::fixed(1.0)};

TEST(RegularizationTest, Resolve) {
  EXPECT_DOUBLE_EQ(Regularization::automatic().resolve(10000), 0.1);
  EXPECT_DOUBLE_EQ(Regularization::fixed(0.3).resolve(10000), 0.3);
  EXPECT_THROW(Regularization::fixed(0.0), ValidationError);
  EXPECT_THROW(Regularization::fixed(-1.0), ValidationError);
}

TEST(EstimatorModeTest, Names) {
  EXPECT_EQ(parse_estimator_mode("exact"), EstimatorMode::exact_dual);
  EXPECT_EQ(parse_estimator_mode("rff"), EstimatorMode::rff_primal);
  EXPECT_EQ(parse_estimator_mode(to_string(EstimatorMode::rff_primal)), EstimatorMode::rff_primal);
  EXPECT_THROW(parse_estimator_mode("fast"), ValidationError);
}

TEST(DualCmoTest, SinglePoint) {
  const PredictionSet ps({0}, Eigen::RowVector2d(1.0, 0.0));
  const auto fit = fit_dual(ps, gram(kCombined, ps.columns()), 1.0);
  const Eigen::MatrixXd w = fit.weights();
  ASSERT_EQ(w.rows(), 1);
  EXPECT_NEAR(w(0, 0), 1.0 / 3.0, 1e-15);
}

TEST(DualCmoTest, TargetsAreLabelsAndPredictions) {
  Rng rng(5);
  const auto ps = oracle::random_predictions(rng, 12, 3, false);
  const auto fit = fit_dual(ps, gram(kCombined, ps.columns()), 0.2);
  EXPECT_EQ(fit.mean_targets(), ps.columns());
  for (std::size_t i = 0; i < 12; ++i) {
    for (int k = 0; k < 3; ++k) {
      EXPECT_EQ(fit.label_targets()(k, static_cast<Eigen::Index>(i)), ps.label(i) == k ? 1.0 : 0.0);
    }
  }
}

TEST(DualCmoTest, WeightsInvertRegularizedGram) {
  Rng rng(6);
  const auto ps = oracle::random_predictions(rng, 40, 4, false);
  const double lambda = 0.05;
  const auto fit = fit_dual(ps, gram(kCombined, ps.columns()), lambda);
  const Eigen::MatrixXd w = fit.weights();
  Eigen::MatrixXd sys = fit.gram().entries;
  sys.diagonal().array() += lambda * 40;
  EXPECT_LT((sys * w - Eigen::MatrixXd::Identity(40, 40)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((w - w.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DualCmoTest, LargeLambdaShrinksOperators) {
  Rng rng(7);
  const auto ps = oracle::random_predictions(rng, 30, 3, false);
  const auto g = gram(kCombined, ps.columns());
  const Eigen::VectorXd col = g.entries.col(0);
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {1.0, 1e3, 1e6, 1e9, 1e12}) {
    const auto fit = fit_dual(ps, g, lambda);
    const auto [ey, ez] = fit.embed(col);
    const double size = fit.weights().cwiseAbs().maxCoeff() + ey.norm() + ez.norm();
    EXPECT_LT(size, prev);
    prev = size;
  }
  EXPECT_LT(prev, 1e-11);
}

TEST(DualCmoTest, EmbedMatchesWeights) {
  Rng rng(8);
  const auto ps = oracle::random_predictions(rng, 20, 3, true);
  const auto fit = fit_dual(ps, gram(kCombined, ps.columns()), 0.1);
  const Eigen::VectorXd col = fit.gram().entries.col(3);
  const auto [ey, ez] = fit.embed(col);
  const Eigen::MatrixXd w = fit.weights();
  EXPECT_LT((ey - fit.label_targets() * w * col).norm(), 1e-12);
  EXPECT_LT((ez - ps.columns() * w * col).norm(), 1e-12);
}

TEST(DualCmoTest, RejectsMismatchedGram) {
  Rng rng(9);
  const auto ps = oracle::random_predictions(rng, 5, 2, false);
  EXPECT_THROW(fit_dual(ps, GramMatrix{Eigen::MatrixXd::Identity(4, 4)}, 0.1), ValidationError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(5, 5);
  bad(0, 0) = std::nan("");
  EXPECT_THROW(fit_dual(ps, GramMatrix{bad}, 0.1), NumericError);
}

TEST(PrimalCmoTest, SinglePointClosedForm) {
  const PredictionSet ps({1}, Eigen::RowVector3d(0.2, 0.5, 0.3));
  const auto map = make_rff(3, 8, 0.7, 2);
  const double lambda = 0.4;
  const auto fit = fit_primal(ps, map, lambda);
  const std::vector<double> p = {0.2, 0.5, 0.3};
  const Eigen::VectorXd f = map.featurize(p);
  const Eigen::Vector3d y(0, 1, 0), z(0.2, 0.5, 0.3);
  const double denom = f.squaredNorm() + lambda;
  EXPECT_LT((fit.label_operator() - y * f.transpose() / denom).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT((fit.mean_operator() - z * f.transpose() / denom).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(PrimalCmoTest, MatchesExplicitOperators) {
  Rng rng(10);
  const auto ps = oracle::random_predictions(rng, 60, 3, false);
  const auto map = make_rff(3, 20, 0.5, 4);
  const auto fit = fit_primal(ps, map, 0.03);
  Eigen::MatrixXd ay, az;
  oracle::explicit_primal_operators(ps, map, 0.03, ay, az);
  EXPECT_LT((fit.label_operator() - ay).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((fit.mean_operator() - az).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((fit.discrepancy_operator() - (az - ay)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PrimalCmoTest, DiscrepancyIsExactlyZeroForPerfectPredictions) {
  const PredictionSet ps({0, 2, 1, 2}, (Eigen::MatrixXd(4, 3) << 1, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1).finished());
  const auto fit = fit_primal(ps, make_rff(3, 40, 0.3, 1), 1e-3);
  EXPECT_EQ(fit.discrepancy_operator(), Eigen::MatrixXd::Zero(3, 3 + 80));
  EXPECT_EQ(ckce(fit), 0.0);
}

// The primal estimate with features F equals the dual one on the Gram F^T F.
TEST(PrimalCmoTest, AgreesWithDualOnFeatureGram) {
  Rng rng(11);
  for (int m : {2, 3, 5}) {
    const auto ps = oracle::random_predictions(rng, 45, m, false);
    const auto map = make_rff(m, 30, 0.4, 12);
    const double lambda = 0.02;
    const double primal = ckce(fit_primal(ps, map, lambda));
    const double dual = ckce(fit_dual(ps, rff_gram(map, ps.columns()), lambda));
    EXPECT_NEAR(primal, dual, 1e-8 * std::max(1.0, dual));
  }
}

TEST(PrimalCmoTest, BlockBoundaryIndependence) {
  Rng rng(12);
  const auto ps = oracle::random_predictions(rng, 9000, 2, false);
  const auto map = make_rff(2, 10, 0.3, 5);
  const auto fit = fit_primal(ps, map, 0.01);
  Eigen::MatrixXd ay, az;
  oracle::explicit_primal_operators(ps, map, 0.01, ay, az);
  EXPECT_LT((fit.label_operator() - ay).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((fit.mean_operator() - az).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(CmoConsistencyTest, CalibratedDiscrepancyShrinksWithN) {
  Rng rng(13);
  std::vector<double> means;
  for (std::size_t n : {250u, 1000u, 4000u}) {
    double total = 0.0;
    for (int r = 0; r < 3; ++r) {
      const auto ps = oracle::random_predictions(rng, n, 3, true);
      EstimatorConfig ecfg;
      ecfg.seed = static_cast<std::uint64_t>(r);
      total += ckce(ps, KernelConfig{}, ecfg);
    }
    means.push_back(total / 3.0);
  }
  EXPECT_GT(means[0], means[1]);
  EXPECT_GT(means[1], means[2]);
}

TEST(CmoInvarianceTest, SamplePermutation) {
  Rng rng(14);
  const auto ps = oracle::random_predictions(rng, 50, 3, false);
  std::vector<std::size_t> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 49; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  const auto shuffled = ps.select(perm);
  const double a = ckce(fit_dual(ps, gram(kCombined, ps.columns()), 0.05));
  const double b = ckce(fit_dual(shuffled, gram(kCombined, shuffled.columns()), 0.05));
  EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, a));
}

TEST(CmoInvarianceTest, DuplicatedSampleWithFixedLambda) {
  Rng rng(15);
  const auto ps = oracle::random_predictions(rng, 40, 3, false);
  std::vector<std::size_t> twice(80);
  for (std::size_t i = 0; i < 80; ++i) twice[i] = i % 40;
  const auto doubled = ps.select(twice);
  EstimatorConfig ecfg;
  ecfg.lambda = Regularization::fixed(0.05);
  const KernelConfig kcfg{KernelFamily::combined, Bandwidth::fixed(0.3)};
  EXPECT_NEAR(ckce(ps, kcfg, ecfg), ckce(doubled, kcfg, ecfg), 1e-8);
}

}  // namespace
}  // namespace calibre
