#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

using namespace lfht;

TEST(Philox, KnownAnswerZeroKeyZeroCounter) {
  // Reference vector for Philox4x32-10 from the Random123 distribution.
  Philox g(0, 0);
  EXPECT_EQ(g(), 0xe169c58d6627e8d5ULL);
  EXPECT_EQ(g(), 0x9b00dbd8bc57ac4cULL);
}

TEST(Philox, SameSeedSameStream) {
  Philox a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto va = a();
    EXPECT_EQ(va, b());
    EXPECT_NE(va, c());
  }
}

TEST(Philox, StreamsDiffer) {
  Philox a(7, 0), b(7, 1);
  EXPECT_NE(a(), b());
}

TEST(Philox, UniformMoments) {
  Philox g(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 0.005);
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0 / 12.0, 0.002);
}

TEST(Philox, BelowIsUnbiased) {
  Philox g(3);
  std::vector<int> hist(7);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++hist[g.below(7)];
  for (int h : hist) EXPECT_NEAR(h, n / 7, 5 * std::sqrt(n / 7.0));
  EXPECT_EQ(g.below(1), 0u);
  EXPECT_EQ(g.below(0), 0u);
}

TEST(Philox, NormalMoments) {
  Philox g(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

class PoissonMean : public ::testing::TestWithParam<double> {};

TEST_P(PoissonMean, MeanAndVariance) {
  const double lambda = GetParam();
  Philox g(17);
  const int n = 100000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(g.poisson(lambda));
    s += k;
    s2 += k * k;
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, lambda, 5 * std::sqrt(lambda / n));
  EXPECT_NEAR(var / lambda, 1.0, 0.03);
}

INSTANTIATE_TEST_SUITE_P(Rates, PoissonMean, ::testing::Values(0.5, 3.0, 9.9, 10.0, 47.5, 1000.0));

TEST(Philox, PoissonOfZeroMean) {
  Philox g(1);
  EXPECT_EQ(g.poisson(0.0), 0u);
}

TEST(Philox, ShuffleIsPermutation) {
  Philox g(9);
  std::vector<int> v(100);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  g.shuffle(std::span<int>(w));
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(DeriveSeed, DistinctCoordinates) {
  EXPECT_NE(derive_seed(1, {1, 2, 3, 0}), derive_seed(1, {1, 2, 3, 1}));
  EXPECT_NE(derive_seed(1, {1, 2}), derive_seed(1, {2, 1}));
  EXPECT_NE(derive_seed(1, "X"), derive_seed(1, "Y"));
  EXPECT_EQ(derive_seed(5, "instance"), derive_seed(5, "instance"));
  static_assert(derive_seed(1, {2}) == derive_seed(1, {2}));
}

TEST(HashTag, MatchesFnv1aReference) {
  EXPECT_EQ(hash_tag(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(hash_tag("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Numerics, CompensatedSumRecoversSmallTerms) {
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  EXPECT_EQ(compensated_sum(xs), 2.0);
}

TEST(Numerics, GaussLegendreIsExactOnPolynomials) {
  EXPECT_NEAR(integrate_1d([](double x) { return std::pow(x, 7) - 3 * x * x; }, 0.0, 2.0, 1), 32.0 - 8.0, 1e-12);
  EXPECT_NEAR(integrate_1d([](double x) { return std::exp(x); }, 0.0, 1.0), std::exp(1.0) - 1.0, 1e-14);
}

TEST(Numerics, IntegrateCubeOfProduct) {
  auto f = [](std::span<const double> x) { return x[0] * x[1] * x[2]; };
  EXPECT_NEAR(integrate_cube(f, 3, 1), 0.125, 1e-14);
}

TEST(Numerics, BisectFindsRoot) {
  const double r = bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14, false);
  EXPECT_NEAR(r, std::sqrt(2.0), 1e-12);
  const double g = bisect([](double x) { return std::log(x) - 10.0; }, 1e-6, 1e12, 1e-12, true);
  EXPECT_NEAR(std::log(g), 10.0, 1e-9);
}
