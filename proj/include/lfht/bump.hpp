#pragma once

// Smooth densities on [0,1]^d built from a base profile plus signed bumps
// on a regular kappa-grid, with exact cell integrals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

namespace lfht {

/// One-dimensional bump psi on [0,1]:
///   psi(x) = (16/sqrt 21) sin^4(pi x) sin(2 pi x)
///          = (5 sin 2pi x - 4 sin 4pi x + sin 6pi x) / sqrt 21.
/// Zero mean, unit L2 norm, four continuous derivatives across the borders.
namespace bump_profile {

inline constexpr const char* kName = "sin4-window";
inline const double kNorm = 1.0 / std::sqrt(21.0);
inline constexpr std::array<double, 3> kCoef{5.0, -4.0, 1.0};  // of sin(2 pi c x), c = 1,2,3

inline double psi(double x) noexcept {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double t = 2.0 * std::numbers::pi * x;
  return kNorm * (5.0 * std::sin(t) - 4.0 * std::sin(2.0 * t) + std::sin(3.0 * t));
}

/// Antiderivative int_0^x psi, clamped to the support.
inline double antiderivative(double x) noexcept {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  const double t = 2.0 * std::numbers::pi * x;
  constexpr double pi = std::numbers::pi;
  return kNorm * (5.0 * (1.0 - std::cos(t)) / (2.0 * pi) - (1.0 - std::cos(2.0 * t)) / pi +
                  (1.0 - std::cos(3.0 * t)) / (6.0 * pi));
}

/// j-th derivative inside (0,1).
inline double derivative(int order, double x) noexcept {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  double s = 0.0;
  for (int c = 1; c <= 3; ++c) {
    const double w = 2.0 * std::numbers::pi * c;
    s += kCoef[c - 1] * std::pow(w, order) * std::sin(w * x + order * std::numbers::pi / 2.0);
  }
  return kNorm * s;
}

inline double l1_norm() noexcept { return 32.0 / (3.0 * std::numbers::pi * std::sqrt(21.0)); }

inline double sup_norm() noexcept {
  return 16.0 / std::sqrt(21.0) * 2.0 * std::pow(5.0 / 6.0, 2.5) * std::sqrt(1.0 / 6.0);
}

/// sup |psi^(order)| by dense evaluation; order 0 is exact.
inline double derivative_sup(int order) {
  if (order == 0) return sup_norm();
  static std::array<double, 8> cache{};
  require(order > 0 && order < 8, "derivative order out of range");
  if (cache[order] == 0.0) {
    constexpr int kGrid = 200000;
    double best = 0.0;
    for (int i = 1; i < kGrid; ++i)
      best = std::max(best, std::fabs(derivative(order, static_cast<double>(i) / kGrid)));
    cache[order] = best;
  }
  return cache[order];
}

/// C^s norm of the tensor bump h = psi^{(x)d}: max over |alpha| <= s of
/// prod_a sup |psi^(alpha_a)|.
inline double tensor_c_norm(int s, std::size_t d) {
  double best = 0.0;
  auto rec = [&](auto&& self, std::size_t axis, int budget, double acc) -> void {
    if (axis == d) {
      best = std::max(best, acc);
      return;
    }
    for (int a = 0; a <= budget; ++a) self(self, axis + 1, budget - a, acc * derivative_sup(a));
  };
  rec(rec, 0, s, 1.0);
  return best;
}

}  // namespace bump_profile

/// Smootherstep ramp used by the floored base: phi(x) = S(3x - 1) with
/// S(t) = 6t^5 - 15t^4 + 10t^3 on [0,1]; int_0^1 phi = 1/2.
namespace floor_ramp {

inline double smootherstep(double t) noexcept {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (t * (6.0 * t - 15.0) + 10.0);
}

inline double phi(double x) noexcept { return smootherstep(3.0 * x - 1.0); }

/// int_0^x phi.
inline double integral(double x) noexcept {
  if (x <= 1.0 / 3.0) return 0.0;
  if (x < 2.0 / 3.0) {
    const double t = 3.0 * x - 1.0;
    return (std::pow(t, 6) - 3.0 * std::pow(t, 5) + 2.5 * std::pow(t, 4)) / 3.0;
  }
  return 1.0 / 6.0 + (std::min(x, 1.0) - 2.0 / 3.0);
}

inline constexpr double kL1 = 0.5;

}  // namespace floor_ramp

enum class BaseKind : std::uint8_t { Uniform = 0, Eps2Floor = 1 };

/// f(x) = base(x) + rho * sum_j eta_j * kappa^{d/2} * h(kappa x - j).
/// Cells are indexed with axis 0 varying fastest.
class SmoothBumpDensity {
 public:
  struct Params {
    std::size_t d = 1;
    double beta = 1.0;
    std::size_t kappa = 1;
    double rho = 0.0;
    std::vector<std::int8_t> eta;  // empty means all zero
    BaseKind base = BaseKind::Uniform;
    double base_eps = 0.0;  // floor level is base_eps^2
  };

  static SmoothBumpDensity make(Params p) {
    if (p.d < 1 || p.d > 6) throw ConstructionError("bump density supports 1 <= d <= 6");
    if (!(p.beta > 0.0)) throw ConstructionError("beta must be > 0");
    if (p.kappa < 1) throw ConstructionError("kappa must be >= 1");
    if (!(p.rho >= 0.0) || !std::isfinite(p.rho)) throw ConstructionError("rho must be >= 0");
    const double cells_d = std::pow(static_cast<double>(p.kappa), static_cast<double>(p.d));
    if (cells_d > 2e7) throw ConstructionError("kappa^d too large");
    const std::size_t cells = ipow(p.kappa, p.d);
    if (p.eta.empty()) p.eta.assign(cells, 0);
    if (p.eta.size() != cells) throw ConstructionError("eta must have kappa^d entries");
    for (auto e : p.eta)
      if (e < -1 || e > 1) throw ConstructionError("eta entries must be in {-1,0,1}");
    double base_min = 0.5;
    if (p.base == BaseKind::Eps2Floor) {
      if (!(p.base_eps > 0.0 && p.base_eps < 1.0)) throw ConstructionError("floor eps must be in (0,1)");
      base_min = p.base_eps * p.base_eps;
    }
    SmoothBumpDensity f;
    f.p_ = std::move(p);
    f.scale_ = std::pow(static_cast<double>(f.p_.kappa), 0.5 * static_cast<double>(f.p_.d));
    const double peak = f.p_.rho * f.scale_ * std::pow(bump_profile::sup_norm(), double(f.p_.d));
    if (peak > base_min * (1.0 + 1e-12))
      throw ConstructionError("bump amplitude violates positivity: rho kappa^{d/2} |h|_inf > base minimum");
    return f;
  }

  static SmoothBumpDensity uniform(std::size_t d, double beta = 1.0) {
    return make({.d = d, .beta = beta});
  }

  std::size_t d() const noexcept { return p_.d; }
  double beta() const noexcept { return p_.beta; }
  std::size_t kappa() const noexcept { return p_.kappa; }
  double rho() const noexcept { return p_.rho; }
  std::span<const std::int8_t> eta() const noexcept { return p_.eta; }
  BaseKind base() const noexcept { return p_.base; }
  double base_eps() const noexcept { return p_.base_eps; }
  const char* profile() const noexcept { return bump_profile::kName; }
  const Params& params() const noexcept { return p_; }

  /// Largest value the density can take.
  double upper_bound() const noexcept {
    const double bump = p_.rho * scale_ * std::pow(bump_profile::sup_norm(), double(p_.d));
    return 1.0 / (p_.base == BaseKind::Eps2Floor ? floor_ramp::kL1 : 1.0) + bump;
  }

  double base_density(std::span<const double> x) const noexcept {
    if (p_.base == BaseKind::Uniform) return 1.0;
    const double e2 = p_.base_eps * p_.base_eps;
    return e2 + floor_ramp::phi(x[0]) / floor_ramp::kL1 * (1.0 - e2);
  }

  double bump_part(std::span<const double> x) const noexcept {
    if (p_.rho == 0.0) return 0.0;
    const double k = static_cast<double>(p_.kappa);
    std::size_t idx = 0;
    std::size_t stride = 1;
    double prod = 1.0;
    for (std::size_t a = 0; a < p_.d; ++a) {
      auto c = static_cast<std::size_t>(std::floor(x[a] * k));
      if (c >= p_.kappa) c = p_.kappa - 1;
      prod *= bump_profile::psi(x[a] * k - static_cast<double>(c));
      idx += c * stride;
      stride *= p_.kappa;
    }
    return p_.rho * p_.eta[idx] * scale_ * prod;
  }

  double density(std::span<const double> x) const noexcept { return base_density(x) + bump_part(x); }

  /// Exact probability of the box [lo, hi].
  double box_mass(std::span<const double> lo, std::span<const double> hi) const {
    double base = 1.0;
    for (std::size_t a = 0; a < p_.d; ++a) base *= hi[a] - lo[a];
    if (p_.base == BaseKind::Eps2Floor) {
      const double e2 = p_.base_eps * p_.base_eps;
      const double rest = base / (hi[0] - lo[0]);
      base = e2 * base + (1.0 - e2) / floor_ramp::kL1 *
                             (floor_ramp::integral(hi[0]) - floor_ramp::integral(lo[0])) * rest;
    }
    if (p_.rho == 0.0) return base;
    // Per-axis overlaps with bump cells.
    std::vector<std::vector<std::pair<std::size_t, double>>> axis(p_.d);
    const double k = static_cast<double>(p_.kappa);
    for (std::size_t a = 0; a < p_.d; ++a) {
      const auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor(lo[a] * k)));
      const auto j1 = std::min(p_.kappa, static_cast<std::size_t>(std::ceil(hi[a] * k)));
      for (std::size_t j = j0; j < j1; ++j) {
        const double jd = static_cast<double>(j);
        const double v = (bump_profile::antiderivative(std::clamp(hi[a] * k - jd, 0.0, 1.0)) -
                          bump_profile::antiderivative(std::clamp(lo[a] * k - jd, 0.0, 1.0))) / k;
        if (v != 0.0) axis[a].emplace_back(j, v);
      }
      if (axis[a].empty()) return base;
    }
    CompensatedSum bumps;
    std::vector<std::size_t> pos(p_.d, 0);
    for (;;) {
      std::size_t idx = 0;
      std::size_t stride = 1;
      double prod = 1.0;
      for (std::size_t a = 0; a < p_.d; ++a) {
        idx += axis[a][pos[a]].first * stride;
        prod *= axis[a][pos[a]].second;
        stride *= p_.kappa;
      }
      if (p_.eta[idx] != 0) bumps.add(p_.eta[idx] * prod);
      std::size_t a = 0;
      while (a < p_.d && ++pos[a] == axis[a].size()) pos[a++] = 0;
      if (a == p_.d) break;
    }
    return base + p_.rho * scale_ * bumps.value();
  }

  friend bool operator==(const SmoothBumpDensity& a, const SmoothBumpDensity& b) noexcept {
    return a.p_.d == b.p_.d && a.p_.beta == b.p_.beta && a.p_.kappa == b.p_.kappa &&
           a.p_.rho == b.p_.rho && a.p_.eta == b.p_.eta && a.p_.base == b.p_.base &&
           a.p_.base_eps == b.p_.base_eps;
  }

 private:
  Params p_;
  double scale_ = 1.0;  // kappa^{d/2}
};

/// Exact cell probabilities of f on the regular grid with `kappa` cells per
/// axis (axis 0 fastest).
inline DiscretePmf project_grid(const SmoothBumpDensity& f, std::size_t kappa) {
  require(kappa >= 1, "kappa must be >= 1");
  const std::size_t d = f.d();
  const std::size_t cells = ipow(kappa, d);
  require(cells <= 20'000'000, "grid too large");
  std::vector<double> w(cells);
  std::vector<std::size_t> c(d, 0);
  std::vector<double> lo(d);
  std::vector<double> hi(d);
  const double kd = static_cast<double>(kappa);
  for (std::size_t i = 0; i < cells; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = static_cast<double>(c[a]) / kd;
      hi[a] = static_cast<double>(c[a] + 1) / kd;
    }
    w[i] = std::max(0.0, f.box_mass(lo, hi));
    std::size_t a = 0;
    while (a < d && ++c[a] == kappa) c[a++] = 0;
  }
  return DiscretePmf::from_weights(std::move(w));
}

/// Rejection sampler. The uniform-base proposal is U[0,1]^d; the floored
/// base uses its own mixture as proposal.
inline SampleSet sample(const SmoothBumpDensity& f, std::size_t n, std::uint64_t seed,
                        Source src = Source::X) {
  const std::size_t d = f.d();
  SampleSet s;
  s.source = src;
  s.kind = SampleKind::Cube;
  s.dim = d;
  s.points.reserve(n * d);
  Philox rng(seed);
  const double bump_peak = f.rho() * std::pow(static_cast<double>(f.kappa()), 0.5 * double(d)) *
                           std::pow(bump_profile::sup_norm(), double(d));
  std::vector<double> x(d);
  const bool floored = f.base() == BaseKind::Eps2Floor;
  const double e2 = f.base_eps() * f.base_eps();
  const double envelope = floored ? 1.0 + bump_peak / e2 : 1.0 + bump_peak;
  for (std::size_t i = 0; i < n; ++i) {
    for (;;) {
      for (auto& xi : x) xi = rng.uniform();
      if (floored && rng.uniform() >= e2) {
        // x_0 from the ramp density 2 phi: propose U[1/3, 1], accept w.p. phi.
        for (;;) {
          const double t = 1.0 / 3.0 + (2.0 / 3.0) * rng.uniform();
          if (rng.uniform() < floor_ramp::phi(t)) {
            x[0] = t;
            break;
          }
        }
      }
      const double ratio = floored ? f.density(x) / f.base_density(x) : f.density(x);
      if (rng.uniform() * envelope < ratio) break;
    }
    s.points.insert(s.points.end(), x.begin(), x.end());
  }
  return s;
}

// ---------------------------------------------------------------------------
// Quadrature over [0,1]^d with panels aligned to every kappa involved.

inline std::size_t aligned_panels(std::initializer_list<const SmoothBumpDensity*> fs,
                                  std::size_t per_cell, std::size_t cap = 4096) {
  std::size_t l = 1;
  for (const auto* f : fs) {
    l = std::lcm(l, f->kappa());
    if (f->base() == BaseKind::Eps2Floor) l = std::lcm(l, std::size_t{3});
  }
  if (l > cap) l = cap;
  return l * per_cell;
}

/// H^2(f, g) = int (sqrt f - sqrt g)^2 by tensor Gauss-Legendre.
inline double hellinger_sq_quadrature(const SmoothBumpDensity& f, const SmoothBumpDensity& g,
                                      std::size_t per_cell = 2) {
  require(f.d() == g.d(), "dimension mismatch");
  const auto pieces = aligned_panels({&f, &g}, per_cell);
  return integrate_cube(
      [&](std::span<const double> x) {
        const double t = std::sqrt(std::max(0.0, f.density(x))) - std::sqrt(std::max(0.0, g.density(x)));
        return t * t;
      },
      f.d(), pieces);
}

inline double l1_distance_quadrature(const SmoothBumpDensity& f, const SmoothBumpDensity& g,
                                     std::size_t per_cell = 2) {
  require(f.d() == g.d(), "dimension mismatch");
  const auto pieces = aligned_panels({&f, &g}, per_cell);
  return integrate_cube([&](std::span<const double> x) { return std::fabs(f.density(x) - g.density(x)); },
                        f.d(), pieces);
}

inline double l2_distance_sq_quadrature(const SmoothBumpDensity& f, const SmoothBumpDensity& g,
                                        std::size_t per_cell = 2) {
  require(f.d() == g.d(), "dimension mismatch");
  const auto pieces = aligned_panels({&f, &g}, per_cell);
  return integrate_cube(
      [&](std::span<const double> x) {
        const double t = f.density(x) - g.density(x);
        return t * t;
      },
      f.d(), pieces);
}

inline double tv_quadrature(const SmoothBumpDensity& f, const SmoothBumpDensity& g) {
  return 0.5 * l1_distance_quadrature(f, g);
}

}  // namespace lfht
