#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

namespace lfht {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

/// 16-point Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre16 {
  static constexpr std::array<double, 8> nodes{
      0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
      0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
      0.9445750230732325760779884, 0.9894009349916499325961542};
  static constexpr std::array<double, 8> weights{
      0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
      0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
      0.0622535239386478928628438, 0.0271524594117540948517806};
};

/// Composite 16-point Gauss-Legendre over [a, b] split into `pieces` panels.
inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           std::size_t pieces = 64) {
  CompensatedSum total;
  const double h = (b - a) / static_cast<double>(pieces);
  for (std::size_t p = 0; p < pieces; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    const double half = 0.5 * h;
    double panel = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      const double dx = half * GaussLegendre16::nodes[i];
      panel += GaussLegendre16::weights[i] * (f(mid - dx) + f(mid + dx));
    }
    total.add(panel * half);
  }
  return total.value();
}

/// Tensor Gauss-Legendre over [0,1]^d with `pieces` panels per axis.
/// f receives a point in [0,1]^d.
inline double integrate_cube(const std::function<double(std::span<const double>)>& f,
                             std::size_t d, std::size_t pieces) {
  std::vector<double> nodes;
  std::vector<double> weights;
  const double h = 1.0 / static_cast<double>(pieces);
  for (std::size_t p = 0; p < pieces; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * h;
    for (std::size_t i = 0; i < 8; ++i) {
      const double dx = 0.5 * h * GaussLegendre16::nodes[i];
      const double w = 0.5 * h * GaussLegendre16::weights[i];
      nodes.push_back(mid - dx);
      weights.push_back(w);
      nodes.push_back(mid + dx);
      weights.push_back(w);
    }
  }
  const std::size_t q = nodes.size();
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  CompensatedSum total;
  for (;;) {
    double w = 1.0;
    for (std::size_t a = 0; a < d; ++a) {
      x[a] = nodes[idx[a]];
      w *= weights[idx[a]];
    }
    total.add(w * f(x));
    std::size_t a = 0;
    while (a < d && ++idx[a] == q) idx[a++] = 0;
    if (a == d) break;
  }
  return total.value();
}

/// Bisection for a monotone function on [lo, hi]; g(lo) and g(hi) must
/// bracket zero. Iterates until the bracket is below `tol` (relative for
/// large magnitudes) or 400 halvings.
inline double bisect(const std::function<double(double)>& g, double lo, double hi, double tol,
                     bool geometric = false) {
  double glo = g(lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = geometric ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    if (hi - lo <= tol * (1.0 + std::fabs(mid))) break;
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace lfht
