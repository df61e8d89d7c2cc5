#include <cmath>

#include <gtest/gtest.h>

#include "calibre/error.hpp"
#include "calibre/rff.hpp"
#include "oracles.hpp"

namespace calibre {
namespace {

double feature_dot(const RffMap& map, const std::vector<double>& p, const std::vector<double>& q) {
  return map.featurize(p).dot(map.featurize(q));
}

TEST(MakeRffTest, DeterministicPerSeed) {
  const auto a = make_rff(3, 50, 0.7, 42);
  const auto b = make_rff(3, 50, 0.7, 42);
  EXPECT_EQ(a.frequencies(), b.frequencies());
  EXPECT_NE(a.frequencies(), make_rff(3, 50, 0.7, 43).frequencies());
  EXPECT_EQ(a.dimension(), 3 + 2 * 50);
  EXPECT_EQ(a.frequencies().rows(), 50);
  EXPECT_EQ(a.frequencies().cols(), 3);
}

TEST(MakeRffTest, FrequencyMoments) {
  const int m = 10, D = 2000;
  const double gamma = 0.5;
  const auto map = make_rff(m, D, gamma, 3);
  const auto& w = map.frequencies();
  const double count = static_cast<double>(m) * D;
  const double mean = w.mean();
  EXPECT_LT(std::abs(mean), 4.0 / gamma / std::sqrt(count));
  const double var = (w.array() - mean).square().sum() / (count - 1.0);
  EXPECT_NEAR(var, 1.0 / (gamma * gamma), 0.2 / (gamma * gamma));
}

TEST(MakeRffTest, InvalidArguments) {
  EXPECT_THROW(make_rff(2, 0, 1.0, 0), ValidationError);
  EXPECT_THROW(make_rff(2, 10, 0.0, 0), ValidationError);
  EXPECT_THROW(make_rff(2, 10, 1.0, 0).featurize(std::vector<double>{1, 0, 0}), ValidationError);
}

TEST(FeaturizeTest, Layout) {
  const auto map = make_rff(2, 4, 1.0, 11);
  const std::vector<double> p = {0.3, 0.7};
  const auto f = map.featurize(p);
  ASSERT_EQ(f.size(), 2 + 8);
  EXPECT_EQ(f(0), 0.3);
  EXPECT_EQ(f(1), 0.7);
  for (int i = 0; i < 4; ++i) {
    const double t = map.frequencies().row(i).dot(Eigen::RowVector2d(0.3, 0.7));
    EXPECT_NEAR(f(2 + 2 * i), std::cos(t) / 2.0, 1e-15);
    EXPECT_NEAR(f(3 + 2 * i), std::sin(t) / 2.0, 1e-15);
  }
}

TEST(FeaturizeTest, SelfInnerProduct) {
  Rng rng(1);
  const auto map = make_rff(4, 100, 0.3, 2);
  for (int t = 0; t < 20; ++t) {
    const Eigen::RowVectorXd p = oracle::random_simplex_point(rng, 4);
    const std::vector<double> ps(p.data(), p.data() + 4);
    EXPECT_NEAR(feature_dot(map, ps, ps), p.squaredNorm() + 1.0, 1e-14);
  }
}

TEST(FeaturizeTest, LinearBlockIsCopiedExactly) {
  Rng rng(3);
  const auto map = make_rff(5, 64, 0.4, 4);
  for (int t = 0; t < 20; ++t) {
    const Eigen::RowVectorXd p = oracle::random_simplex_point(rng, 5);
    const Eigen::RowVectorXd q = oracle::random_simplex_point(rng, 5);
    const std::vector<double> ps(p.data(), p.data() + 5), qs(q.data(), q.data() + 5);
    const auto fp = map.featurize(ps);
    const auto fq = map.featurize(qs);
    EXPECT_EQ(Eigen::VectorXd(fp.head(5)), Eigen::VectorXd(p.transpose()));
    double lin = 0.0, direct = 0.0;
    for (int k = 0; k < 5; ++k) {
      lin += fp(k) * fq(k);
      direct += ps[static_cast<std::size_t>(k)] * qs[static_cast<std::size_t>(k)];
    }
    EXPECT_EQ(lin, direct);
  }
}

// Mean over 10^4 independent maps of phi(p).phi(q) for p = (1,0), q = (0,1), gamma = 1.
TEST(FeaturizeTest, UnbiasedForCombinedKernel) {
  const std::vector<double> p = {1, 0}, q = {0, 1};
  const int reps = 10000;
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < reps; ++s) {
    const double v = feature_dot(make_rff(2, 100, 1.0, derive_seed(77, s)), p, q);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / reps;
  const double se = std::sqrt((sum_sq / reps - mean * mean) / (reps - 1));
  EXPECT_LT(std::abs(mean - std::exp(-1.0)), 3.0 * se);
}

TEST(FeaturizeTest, VarianceHalvesWhenFeaturesDouble) {
  const std::vector<double> p = {0.8, 0.2}, q = {0.3, 0.7};
  auto variance = [&](int D) {
    const int reps = 4000;
    double sum = 0.0, sum_sq = 0.0;
    for (int s = 0; s < reps; ++s) {
      const double v = feature_dot(make_rff(2, D, 0.4, derive_seed(1000 + D, s)), p, q);
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / reps;
    return (sum_sq / reps - mean * mean) * reps / (reps - 1);
  };
  const double ratio = variance(100) / variance(50);
  EXPECT_GT(ratio, 0.25);
  EXPECT_LT(ratio, 0.75);
}

TEST(FeaturizeTest, AverageErrorWithinRate) {
  Rng rng(8);
  for (int D : {100, 400}) {
    const auto map = make_rff(3, D, 0.5, 9);
    double err = 0.0;
    for (int t = 0; t < 100; ++t) {
      const Eigen::RowVectorXd p = oracle::random_simplex_point(rng, 3);
      const Eigen::RowVectorXd q = oracle::random_simplex_point(rng, 3);
      const std::vector<double> ps(p.data(), p.data() + 3), qs(q.data(), q.data() + 3);
      err += std::abs(feature_dot(map, ps, qs) - oracle::kernel(2, p, q, 0.5));
    }
    EXPECT_LE(err / 100.0, 5.0 / std::sqrt(static_cast<double>(D)));
  }
}

TEST(RffGramTest, MatchesFeatureDots) {
  Rng rng(21);
  const auto ps = oracle::random_predictions(rng, 25, 3, false);
  const auto map = make_rff(3, 30, 0.6, 5);
  const auto g = rff_gram(map, ps.columns());
  EXPECT_EQ(g.entries, g.entries.transpose());
  for (Eigen::Index i = 0; i < 25; ++i) {
    for (Eigen::Index j = 0; j < 25; ++j) {
      const Eigen::RowVectorXd a = ps.probs().row(i), b = ps.probs().row(j);
      EXPECT_NEAR(g(i, j), feature_dot(map, {a.data(), a.data() + 3}, {b.data(), b.data() + 3}), 1e-13);
    }
  }
}

TEST(RffMapTest, FamilyVariants) {
  const std::vector<double> p = {0.25, 0.75}, q = {0.6, 0.4};
  const auto lin = make_rff(2, 10, 1.0, 1, KernelFamily::linear);
  EXPECT_EQ(lin.dimension(), 2);
  EXPECT_NEAR(feature_dot(lin, p, q), 0.25 * 0.6 + 0.75 * 0.4, 1e-15);
  const auto gau = make_rff(2, 10, 1.0, 1, KernelFamily::gaussian);
  const auto comb = make_rff(2, 10, 1.0, 1, KernelFamily::combined);
  EXPECT_EQ(gau.dimension(), 20);
  EXPECT_NEAR(feature_dot(comb, p, q), feature_dot(lin, p, q) + feature_dot(gau, p, q), 1e-15);
}

}  // namespace
}  // namespace calibre
