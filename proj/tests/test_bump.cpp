#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "lfht/adversarial.hpp"
#include "lfht/bump.hpp"
#include "lfht/errors.hpp"
#include "lfht/numerics.hpp"

using namespace lfht;
namespace bp = lfht::bump_profile;

TEST(BumpProfile, ZeroMeanUnitEnergy) {
  EXPECT_NEAR(integrate_1d(bp::psi, 0.0, 1.0), 0.0, 1e-15);
  EXPECT_NEAR(integrate_1d([](double x) { return bp::psi(x) * bp::psi(x); }, 0.0, 1.0), 1.0, 1e-14);
}

TEST(BumpProfile, ClosedFormNorms) {
  EXPECT_NEAR(integrate_1d([](double x) { return std::fabs(bp::psi(x)); }, 0.0, 1.0, 512), bp::l1_norm(), 1e-9);
  double mx = 0.0;
  for (int i = 0; i <= 100000; ++i) mx = std::max(mx, std::fabs(bp::psi(i / 100000.0)));
  EXPECT_NEAR(mx, bp::sup_norm(), 1e-8);
  EXPECT_LE(mx, bp::sup_norm());
}

TEST(BumpProfile, AntiderivativeMatchesQuadrature) {
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.81, 1.0})
    EXPECT_NEAR(bp::antiderivative(x), integrate_1d(bp::psi, 0.0, x), 1e-14) << x;
  EXPECT_NEAR(bp::antiderivative(1.0), 0.0, 1e-15);
}

TEST(BumpProfile, VanishesSmoothlyAtCellBorders) {
  for (int order = 0; order <= 4; ++order) {
    EXPECT_NEAR(bp::derivative(order, 0.0), 0.0, 1e-9) << order;
    EXPECT_NEAR(bp::derivative(order, 1.0), 0.0, 1e-8) << order;
  }
  // The fifth derivative does not vanish: the profile is C^4 across borders.
  EXPECT_GT(std::fabs(bp::derivative(5, 1e-9)), 1.0);
}

TEST(BumpProfile, DerivativeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (double x : {0.2, 0.45, 0.7})
    for (int order = 0; order < 4; ++order)
      EXPECT_NEAR((bp::derivative(order, x + h) - bp::derivative(order, x - h)) / (2 * h), bp::derivative(order + 1, x),
                  1e-4 * (1 + std::fabs(bp::derivative(order + 1, x))));
}

TEST(FloorRamp, IntegratesToHalf) {
  EXPECT_NEAR(integrate_1d(floor_ramp::phi, 0.0, 1.0, 96), floor_ramp::kL1, 1e-13);
  EXPECT_NEAR(floor_ramp::integral(1.0), 0.5, 1e-15);
  EXPECT_EQ(floor_ramp::phi(0.2), 0.0);
  EXPECT_EQ(floor_ramp::phi(0.9), 1.0);
}

SmoothBumpDensity random_bump(std::size_t d, std::size_t kappa, std::uint64_t seed, BaseKind base = BaseKind::Uniform) {
  Philox g(seed);
  const std::size_t cells = ipow(kappa, d);
  std::vector<std::int8_t> eta(cells);
  for (auto& e : eta) e = static_cast<std::int8_t>(static_cast<int>(g.below(3)) - 1);
  const double peak = std::pow(static_cast<double>(kappa), 0.5 * double(d)) * std::pow(bp::sup_norm(), double(d));
  SmoothBumpDensity::Params p{.d = d, .beta = 2.0, .kappa = kappa, .eta = eta, .base = base};
  if (base == BaseKind::Eps2Floor) {
    p.base_eps = 0.3;
    for (std::size_t i = 0; i < cells; ++i)
      if (i % kappa >= kappa / 3) p.eta[i] = 0;
    p.rho = 0.09 * g.uniform() / peak;
  } else {
    p.rho = 0.5 * g.uniform() / peak;
  }
  return SmoothBumpDensity::make(std::move(p));
}

TEST(SmoothBumpDensity, IntegratesToOne) {
  for (std::size_t d : {1, 2, 3}) {
    const auto f = random_bump(d, 3, 10 + d);
    EXPECT_NEAR(integrate_cube([&](std::span<const double> x) { return f.density(x); }, d, 6), 1.0, 1e-12);
    const auto g = random_bump(d, 6, 20 + d, BaseKind::Eps2Floor);
    EXPECT_NEAR(integrate_cube([&](std::span<const double> x) { return g.density(x); }, d, 6), 1.0, 1e-12);
  }
}

TEST(SmoothBumpDensity, PositivityEnforced) {
  const double peak = std::sqrt(4.0) * bp::sup_norm();
  EXPECT_THROW(SmoothBumpDensity::make({.d = 1, .kappa = 4, .rho = 0.51 / peak, .eta = {1, 1, 1, 1}}),
               ConstructionError);
  EXPECT_NO_THROW(SmoothBumpDensity::make({.d = 1, .kappa = 4, .rho = 0.5 / peak, .eta = {1, 1, 1, 1}}));
  EXPECT_THROW(SmoothBumpDensity::make({.d = 1, .kappa = 2, .eta = {1, 2}}), ConstructionError);
  EXPECT_THROW(SmoothBumpDensity::make({.d = 1, .kappa = 2, .eta = {1}}), ConstructionError);
  EXPECT_THROW(SmoothBumpDensity::make({.d = 7}), ConstructionError);
}

TEST(SmoothBumpDensity, DensityNonNegativeOnGrid) {
  const auto f = random_bump(2, 5, 3);
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const double x[] = {i / 200.0, j / 200.0};
      ASSERT_GE(f.density(x), 0.0);
    }
}

TEST(ProjectGrid, ZeroAmplitudeIsUniform) {
  const auto p = project_grid(SmoothBumpDensity::uniform(2), 5);
  EXPECT_EQ(p.size(), 25u);
  for (double w : p.weights()) EXPECT_NEAR(w, 1.0 / 25, 1e-15);
}

TEST(ProjectGrid, MatchingResolutionKillsBumps) {
  const auto f = random_bump(2, 4, 5);
  const auto p = project_grid(f, 4);
  for (double w : p.weights()) EXPECT_NEAR(w, 1.0 / 16, 1e-14);
}

TEST(ProjectGrid, CellMassesMatchQuadrature) {
  const auto f = random_bump(2, 3, 6);
  const auto p = project_grid(f, 7);
  EXPECT_NEAR(compensated_sum(p.weights()), 1.0, 1e-13);
  // Cell (2, 5) checked against direct quadrature.
  const double q = integrate_cube(
      [&](std::span<const double> u) {
        const double x[] = {(2 + u[0]) / 7.0, (5 + u[1]) / 7.0};
        return f.density(x) / 49.0;
      },
      2, 24);
  EXPECT_NEAR(p[2 + 5 * 7], q, 1e-10);
}

TEST(ProjectGrid, FlooredBaseMasses) {
  const auto f = random_bump(1, 9, 8, BaseKind::Eps2Floor);
  const auto p = project_grid(f, 12);
  for (std::size_t i = 0; i < 12; ++i) {
    const double q = integrate_1d([&](double x) {
      const double pt[] = {x};
      return f.density(pt);
    }, i / 12.0, (i + 1) / 12.0, 16);
    EXPECT_NEAR(p[i], q, 1e-12);
  }
}

TEST(ProjectGrid, ContractsInL2) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = random_bump(1, 5, 100 + s), g = random_bump(1, 5, 200 + s);
    for (std::size_t kappa : {2, 7, 10, 15}) {
      const auto pf = project_grid(f, kappa), pg = project_grid(g, kappa);
      // Histogram density has height kappa * mass, so its L2 norm is kappa * sum(mass diff)^2.
      const double proj = static_cast<double>(kappa) * l2_distance_sq(pf.weights(), pg.weights());
      EXPECT_LE(proj, l2_distance_sq_quadrature(f, g) + 1e-12);
    }
  }
}

TEST(SampleBump, UniformBaseRejectionMatchesCellMasses) {
  const auto f = random_bump(1, 3, 9);
  const auto p = project_grid(f, 12);
  const auto s = bin_cube_sample(sample(f, 120000, 4), 12);
  const auto e = empirical_pmf(s, 12);
  for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(e[i], p[i], 5 * std::sqrt(p[i] / 120000) + 1e-4);
}

TEST(SampleBump, FlooredBaseMatchesCellMasses) {
  const auto f = random_bump(2, 6, 10, BaseKind::Eps2Floor);
  const auto p = project_grid(f, 6);
  const auto e = empirical_pmf(bin_cube_sample(sample(f, 150000, 5), 6), 36);
  for (std::size_t i = 0; i < 36; ++i) EXPECT_NEAR(e[i], p[i], 5 * std::sqrt(p[i] / 150000) + 1e-4) << i;
}

TEST(SampleBump, Deterministic) {
  const auto f = random_bump(2, 3, 11);
  EXPECT_EQ(sample(f, 500, 1), sample(f, 500, 1));
}

TEST(Quadrature, HellingerOfIdenticalIsZero) {
  const auto f = random_bump(2, 3, 12);
  EXPECT_NEAR(hellinger_sq_quadrature(f, f), 0.0, 1e-15);
}

TEST(Quadrature, HellingerContraction) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto f = random_bump(2, 3, 300 + s), g = random_bump(2, 3, 400 + s);
    const double h = std::sqrt(hellinger_sq_quadrature(f, g));
    for (std::size_t kappa : {2, 5, 6}) {
      const double hp = hellinger(project_grid(f, kappa), project_grid(g, kappa));
      EXPECT_LE(hp, h + 1e-6);
    }
  }
}
