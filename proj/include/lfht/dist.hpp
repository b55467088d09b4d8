#pragma once

// Discrete pmfs, Gaussian sequence specs, sample containers and the
// closed-form divergences between them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lfht/errors.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

namespace lfht {

enum class Source : std::uint8_t { X = 0, Y = 1, Z = 2 };
enum class SampleKind : std::uint8_t { Discrete = 0, Cube = 1, Sequence = 2 };

inline const char* to_string(Source s) {
  switch (s) {
    case Source::X: return "X";
    case Source::Y: return "Y";
    case Source::Z: return "Z";
  }
  return "?";
}

inline const char* to_string(SampleKind k) {
  switch (k) {
    case SampleKind::Discrete: return "discrete";
    case SampleKind::Cube: return "cube";
    case SampleKind::Sequence: return "sequence";
  }
  return "?";
}

/// Probability mass function on the alphabet {0, ..., k-1}.
class DiscretePmf {
 public:
  /// Normalizes `weights`; throws ConstructionError on negative or
  /// non-finite entries and on an all-zero vector.
  static DiscretePmf from_weights(std::vector<double> weights) {
    if (weights.empty()) throw ConstructionError("pmf needs at least one weight");
    CompensatedSum total;
    for (double w : weights) {
      if (!std::isfinite(w) || w < 0.0) throw ConstructionError("pmf weights must be finite and >= 0");
      total.add(w);
    }
    const double sum = total.value();
    if (!(sum > 0.0)) throw ConstructionError("pmf needs a strictly positive weight");
    for (double& w : weights) w /= sum;
    DiscretePmf p;
    p.weights_ = std::move(weights);
    p.original_sum_ = sum;
    return p;
  }

  static DiscretePmf uniform(std::size_t k) { return from_weights(std::vector<double>(k, 1.0)); }

  static DiscretePmf point_mass(std::size_t k, std::size_t bin) {
    require(bin < k, "point mass bin outside alphabet");
    std::vector<double> w(k, 0.0);
    w[bin] = 1.0;
    return from_weights(std::move(w));
  }

  std::size_t size() const noexcept { return weights_.size(); }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const noexcept { return weights_[i]; }
  double original_sum() const noexcept { return original_sum_; }

  /// Membership test for the bounded class: every weight <= C / k.
  bool bounded_by(double c_bound) const noexcept {
    const double cap = c_bound / static_cast<double>(size());
    return std::all_of(weights_.begin(), weights_.end(), [&](double w) { return w <= cap; });
  }

  double l2_norm_sq() const noexcept {
    CompensatedSum s;
    for (double w : weights_) s.add(w * w);
    return s.value();
  }

  friend bool operator==(const DiscretePmf& a, const DiscretePmf& b) noexcept {
    return a.weights_ == b.weights_;
  }

 private:
  std::vector<double> weights_;
  double original_sum_ = 1.0;
};

inline DiscretePmf make_discrete_pmf(std::vector<double> weights) {
  return DiscretePmf::from_weights(std::move(weights));
}

/// Truncated Gaussian sequence model: observations are N(theta, I_r).
struct GaussianSequenceSpec {
  std::vector<double> theta;
  std::vector<double> gamma;  // prior variances used to draw theta (may be empty)
  double s = 1.0;             // Sobolev smoothness
  double c_sob = 1.0;         // ellipsoid radius

  std::size_t r() const noexcept { return theta.size(); }

  /// sum_j j^{2s} theta_j^2 with 1-based j.
  double sobolev_norm_sq() const noexcept {
    CompensatedSum acc;
    for (std::size_t j = 0; j < theta.size(); ++j)
      acc.add(std::pow(static_cast<double>(j + 1), 2.0 * s) * theta[j] * theta[j]);
    return acc.value();
  }

  bool in_ellipsoid() const noexcept { return sobolev_norm_sq() <= c_sob; }
};

/// i.i.d. observations from one source. Discrete samples store 0-based bin
/// indices; cube and sequence samples store points row-major in `points`.
struct SampleSet {
  Source source = Source::X;
  SampleKind kind = SampleKind::Discrete;
  std::size_t dim = 0;  // k, d or r
  std::vector<std::uint32_t> bins;
  std::vector<double> points;

  static SampleSet discrete(std::size_t k, std::vector<std::uint32_t> bins, Source src = Source::X) {
    for (auto b : bins) require(b < k, "discrete observation outside alphabet");
    SampleSet s;
    s.source = src;
    s.kind = SampleKind::Discrete;
    s.dim = k;
    s.bins = std::move(bins);
    return s;
  }

  static SampleSet cube(std::size_t d, std::vector<double> pts, Source src = Source::X) {
    require(d > 0 && pts.size() % d == 0, "cube sample size must be a multiple of d");
    for (double x : pts) require(x >= 0.0 && x <= 1.0, "cube observation outside [0,1]^d");
    SampleSet s;
    s.source = src;
    s.kind = SampleKind::Cube;
    s.dim = d;
    s.points = std::move(pts);
    return s;
  }

  static SampleSet sequence(std::size_t r, std::vector<double> pts, Source src = Source::X) {
    require(r > 0 && pts.size() % r == 0, "sequence sample size must be a multiple of r");
    SampleSet s;
    s.source = src;
    s.kind = SampleKind::Sequence;
    s.dim = r;
    s.points = std::move(pts);
    return s;
  }

  std::size_t count() const noexcept {
    return kind == SampleKind::Discrete ? bins.size() : (dim == 0 ? 0 : points.size() / dim);
  }

  std::span<const double> point(std::size_t i) const noexcept {
    return std::span<const double>(points).subspan(i * dim, dim);
  }

  /// Observations [begin, begin + len) as a new set with the same tag.
  SampleSet slice(std::size_t begin, std::size_t len) const {
    require(begin + len <= count(), "slice out of range");
    SampleSet s;
    s.source = source;
    s.kind = kind;
    s.dim = dim;
    if (kind == SampleKind::Discrete)
      s.bins.assign(bins.begin() + static_cast<std::ptrdiff_t>(begin),
                    bins.begin() + static_cast<std::ptrdiff_t>(begin + len));
    else
      s.points.assign(points.begin() + static_cast<std::ptrdiff_t>(begin * dim),
                      points.begin() + static_cast<std::ptrdiff_t>((begin + len) * dim));
    return s;
  }

  SampleSet with_source(Source src) const {
    SampleSet s = *this;
    s.source = src;
    return s;
  }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;
};

inline SampleSet concat(const SampleSet& a, const SampleSet& b) {
  require(a.kind == b.kind && a.dim == b.dim, "concat needs matching sample kinds");
  SampleSet s = a;
  s.bins.insert(s.bins.end(), b.bins.begin(), b.bins.end());
  s.points.insert(s.points.end(), b.points.begin(), b.points.end());
  return s;
}

/// Walker/Vose alias table for O(1) categorical draws.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> w) : prob_(w.size()), alias_(w.size()) {
    const std::size_t k = w.size();
    std::vector<double> scaled(k);
    std::vector<std::uint32_t> small;
    std::vector<std::uint32_t> large;
    for (std::size_t i = 0; i < k; ++i) {
      scaled[i] = w[i] * static_cast<double>(k);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const auto s = small.back();
      small.pop_back();
      const auto l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob_[i] = 1.0, alias_[i] = i;
    for (auto i : small) prob_[i] = 1.0, alias_[i] = i;
  }

  std::uint32_t draw(Philox& rng) const noexcept {
    const auto i = static_cast<std::uint32_t>(rng.below(prob_.size()));
    return rng.uniform() < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

inline SampleSet sample(const DiscretePmf& p, std::size_t n, std::uint64_t seed,
                        Source src = Source::X) {
  SampleSet s;
  s.source = src;
  s.kind = SampleKind::Discrete;
  s.dim = p.size();
  if (n == 0) return s;
  const AliasTable table(p.weights());
  Philox rng(seed);
  s.bins.resize(n);
  for (auto& b : s.bins) b = table.draw(rng);
  return s;
}

inline SampleSet sample(const GaussianSequenceSpec& g, std::size_t n, std::uint64_t seed,
                        Source src = Source::X) {
  const std::size_t r = g.r();
  require(r > 0, "gaussian spec needs r >= 1");
  SampleSet s;
  s.source = src;
  s.kind = SampleKind::Sequence;
  s.dim = r;
  s.points.resize(n * r);
  Philox rng(seed);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) s.points[i * r + j] = g.theta[j] + rng.normal();
  return s;
}

// ---------------------------------------------------------------------------
// Divergences between pmfs

/// A divergence value that may be +inf because of a support violation.
struct FlaggedDivergence {
  double value = 0.0;
  bool support_violation = false;
};

inline void check_same_alphabet(const DiscretePmf& p, const DiscretePmf& q) {
  require(p.size() == q.size(), "alphabet mismatch");
}

inline double tv(const DiscretePmf& p, const DiscretePmf& q) {
  check_same_alphabet(p, q);
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) s.add(std::fabs(p[i] - q[i]));
  return 0.5 * s.value();
}

/// Squared Hellinger distance sum_i (sqrt p_i - sqrt q_i)^2, in [0, 2].
inline double hellinger_sq(const DiscretePmf& p, const DiscretePmf& q) {
  check_same_alphabet(p, q);
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    s.add(d * d);
  }
  return s.value();
}

inline double hellinger(const DiscretePmf& p, const DiscretePmf& q) {
  return std::sqrt(hellinger_sq(p, q));
}

/// KL(p || q) in nats, 0 log(0/0) = 0.
inline FlaggedDivergence kl(const DiscretePmf& p, const DiscretePmf& q) {
  check_same_alphabet(p, q);
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return {std::numeric_limits<double>::infinity(), true};
    s.add(p[i] * std::log(p[i] / q[i]));
  }
  return {std::max(0.0, s.value()), false};
}

/// chi^2(p || q) = sum_i (p_i - q_i)^2 / q_i.
inline FlaggedDivergence chi2(const DiscretePmf& p, const DiscretePmf& q) {
  check_same_alphabet(p, q);
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) {
      if (p[i] == 0.0) continue;
      return {std::numeric_limits<double>::infinity(), true};
    }
    const double d = p[i] - q[i];
    s.add(d * d / q[i]);
  }
  return {s.value(), false};
}

inline double l2_distance_sq(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "length mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add((a[i] - b[i]) * (a[i] - b[i]));
  return s.value();
}

/// Divergences between N(theta, I) and N(theta', I). TV has no closed form;
/// it is reported as a certified bracket.
struct GaussianDivergences {
  double tv_lower = 0.0;
  double tv_upper = 0.0;
  double hellinger = 0.0;  // H, not H^2
  double kl = 0.0;
  double chi2 = 0.0;
};

inline GaussianDivergences gaussian_divergences(std::span<const double> theta,
                                                std::span<const double> theta2) {
  const std::size_t r = std::max(theta.size(), theta2.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < r; ++i) {
    const double a = i < theta.size() ? theta[i] : 0.0;
    const double b = i < theta2.size() ? theta2[i] : 0.0;
    acc.add((a - b) * (a - b));
  }
  const double dist_sq = acc.value();
  GaussianDivergences out;
  const double h_sq = 2.0 * (1.0 - std::exp(-dist_sq / 8.0));
  out.hellinger = std::sqrt(h_sq);
  out.kl = dist_sq / 2.0;
  out.chi2 = std::expm1(dist_sq);
  out.tv_upper = std::min(1.0, out.hellinger);
  out.tv_lower = std::max(0.5 * h_sq, std::min(1.0, std::sqrt(dist_sq) / 200.0));
  out.tv_lower = std::min(out.tv_lower, out.tv_upper);
  return out;
}

// ---------------------------------------------------------------------------
// Empirical estimators

inline std::vector<std::uint64_t> bin_counts(const SampleSet& s, std::size_t k) {
  require(s.kind == SampleKind::Discrete, "bin counts need a discrete sample");
  require(s.dim <= k, "sample alphabet larger than k");
  std::vector<std::uint64_t> c(k, 0);
  for (auto b : s.bins) ++c[b];
  return c;
}

inline DiscretePmf empirical_pmf(const SampleSet& s, std::size_t k) {
  require(s.count() >= 1, "empirical pmf of an empty sample");
  const auto c = bin_counts(s, k);
  std::vector<double> w(k);
  const double n = static_cast<double>(s.count());
  for (std::size_t i = 0; i < k; ++i) w[i] = static_cast<double>(c[i]) / n;
  return DiscretePmf::from_weights(std::move(w));
}

inline std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

/// Flat index of the grid cell containing x; axis 0 varies fastest.
/// Cells are half-open except that coordinate 1.0 joins the last cell.
inline std::size_t cube_cell(std::span<const double> x, std::size_t kappa) {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (double xi : x) {
    require(xi >= 0.0 && xi <= 1.0, "point outside the unit cube");
    auto c = static_cast<std::size_t>(std::floor(xi * static_cast<double>(kappa)));
    if (c >= kappa) c = kappa - 1;
    idx += c * stride;
    stride *= kappa;
  }
  return idx;
}

inline SampleSet bin_cube_sample(const SampleSet& s, std::size_t kappa) {
  require(s.kind == SampleKind::Cube, "binning needs a cube sample");
  require(kappa >= 1, "kappa must be >= 1");
  const std::size_t k = ipow(kappa, s.dim);
  SampleSet out;
  out.source = s.source;
  out.kind = SampleKind::Discrete;
  out.dim = k;
  out.bins.reserve(s.count());
  for (std::size_t i = 0; i < s.count(); ++i)
    out.bins.push_back(static_cast<std::uint32_t>(cube_cell(s.point(i), kappa)));
  return out;
}

}  // namespace lfht
