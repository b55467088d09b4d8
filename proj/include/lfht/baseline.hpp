#pragma once

// Competitor tests built from density estimates (Scheffe, Huber, Birge),
// the likelihood-ratio oracle, permutation p-values, majority voting and
// the reductions between testing problems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lfht/adversarial.hpp"
#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/l2_engine.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

namespace lfht {

/// Decision 0 always means "Z came from P_X".
using LfhtTest = std::function<int(const SampleSet& x, const SampleSet& y, const SampleSet& z)>;
using TwoSampleTest = std::function<int(const SampleSet& a, const SampleSet& b)>;

struct DensityEstimatePair {
  DiscretePmf phat_x;
  DiscretePmf phat_y;
  double smoothing = 0.0;  // pseudo-count added to every bin
};

/// Empirical pmfs with add-`smoothing` pseudo-counts.
inline DensityEstimatePair estimate_pair(const SampleSet& x, const SampleSet& y, std::size_t k,
                                         double smoothing = 0.5) {
  require(smoothing >= 0.0, "smoothing must be >= 0");
  auto est = [&](const SampleSet& s) {
    const auto c = bin_counts(s, k);
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = static_cast<double>(c[i]) + smoothing;
    return DiscretePmf::from_weights(std::move(w));
  };
  return {est(x), est(y), smoothing};
}

struct BaselineResult {
  int decision = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  std::vector<std::string> warnings;
};

// ---------------------------------------------------------------------------

inline BaselineResult scheffe_test(const DensityEstimatePair& est, const SampleSet& z) {
  check_same_alphabet(est.phat_x, est.phat_y);
  require(z.kind == SampleKind::Discrete && z.dim <= est.phat_x.size(), "Z must be discrete on the estimate alphabet");
  require(z.count() >= 1, "Z must be non-empty");
  const std::size_t k = est.phat_x.size();
  std::vector<char> in_s(k);
  CompensatedSum mass_x, mass_y;
  for (std::size_t i = 0; i < k; ++i) {
    in_s[i] = est.phat_y[i] >= est.phat_x[i];
    if (in_s[i]) {
      mass_x.add(est.phat_x[i]);
      mass_y.add(est.phat_y[i]);
    }
  }
  BaselineResult r;
  std::size_t hits = 0;
  for (auto b : z.bins) hits += in_s[b] ? 1 : 0;
  r.statistic = static_cast<double>(hits) / static_cast<double>(z.count());
  r.threshold = 0.5 * (mass_x.value() + mass_y.value());
  r.decision = r.statistic >= r.threshold ? 1 : 0;
  if (est.phat_x == est.phat_y) r.warnings.push_back("identical estimates: Scheffe set is the whole alphabet");
  return r;
}

// ---------------------------------------------------------------------------
// Likelihood-ratio oracle with the true distributions.

namespace detail {

/// Sums log-ratios where some terms may be +-inf: any infinity is
/// decisive, opposite infinities are settled by count.
struct LogRatioSum {
  CompensatedSum finite;
  std::size_t pos_inf = 0;
  std::size_t neg_inf = 0;

  void add(double v) {
    if (v == std::numeric_limits<double>::infinity())
      ++pos_inf;
    else if (v == -std::numeric_limits<double>::infinity())
      ++neg_inf;
    else
      finite.add(v);
  }
  double value() const {
    if (pos_inf > neg_inf) return std::numeric_limits<double>::infinity();
    if (neg_inf > pos_inf) return -std::numeric_limits<double>::infinity();
    return finite.value();
  }
};

inline double log_ratio(double a, double b) {
  if (a == 0.0 && b == 0.0) return 0.0;
  if (b == 0.0) return std::numeric_limits<double>::infinity();
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(a / b);
}

}  // namespace detail

/// sum_j log(dP_X/dP_Y)(Z_j); decision 0 iff the sum is >= 0.
inline BaselineResult np_oracle_test(const Distribution& px, const Distribution& py, const SampleSet& z) {
  require(px.index() == py.index(), "NP oracle needs distributions of the same kind");
  detail::LogRatioSum acc;
  if (const auto* p = std::get_if<DiscretePmf>(&px)) {
    const auto& q = std::get<DiscretePmf>(py);
    check_same_alphabet(*p, q);
    require(z.kind == SampleKind::Discrete && z.dim <= p->size(), "Z must be discrete on the alphabet");
    for (auto b : z.bins) acc.add(detail::log_ratio((*p)[b], q[b]));
  } else if (const auto* f = std::get_if<SmoothBumpDensity>(&px)) {
    const auto& g = std::get<SmoothBumpDensity>(py);
    require(z.kind == SampleKind::Cube && z.dim == f->d(), "Z must be a cube sample");
    for (std::size_t i = 0; i < z.count(); ++i) acc.add(detail::log_ratio(f->density(z.point(i)), g.density(z.point(i))));
  } else {
    const auto& gx = std::get<GaussianSequenceSpec>(px);
    const auto& gy = std::get<GaussianSequenceSpec>(py);
    require(z.kind == SampleKind::Sequence, "Z must be a sequence sample");
    for (std::size_t i = 0; i < z.count(); ++i) {
      const auto p = z.point(i);
      double v = 0.0;
      for (std::size_t j = 0; j < z.dim; ++j) {
        const double a = j < gx.theta.size() ? gx.theta[j] : 0.0;
        const double b = j < gy.theta.size() ? gy.theta[j] : 0.0;
        v += 0.5 * ((p[j] - b) * (p[j] - b) - (p[j] - a) * (p[j] - a));
      }
      acc.add(v);
    }
  }
  BaselineResult r;
  r.statistic = acc.value();
  r.decision = r.statistic >= 0.0 ? 0 : 1;
  return r;
}

// ---------------------------------------------------------------------------
// Huber's censored likelihood-ratio test.

struct HuberClamp {
  double c1 = 0.0;  // lower level for L = phat_y / phat_x
  double c2 = 0.0;  // upper level
  bool fallback = false;
  double residual1 = 0.0;
  double residual2 = 0.0;
};

/// Solves sum_i (c1 px_i - py_i)_+ / (1 + c1) = eps/3 (increasing in c1) and
/// sum_i (py_i - c2 px_i)_+ / (1 + c2) = eps/3 (decreasing in c2) on
/// [1e-12, 1e12]. The pair is symmetric: swapping the estimates maps
/// (c1, c2) to (1/c2, 1/c1).
inline HuberClamp huber_clamp(const DensityEstimatePair& est, double eps) {
  check_same_alphabet(est.phat_x, est.phat_y);
  const auto px = est.phat_x.weights();
  const auto py = est.phat_y.weights();
  for (std::size_t i = 0; i < px.size(); ++i)
    require(px[i] > 0.0 && py[i] > 0.0, "Huber test needs strictly positive estimates");
  const double target = eps / 3.0;
  auto g1 = [&](double c) {
    CompensatedSum s;
    for (std::size_t i = 0; i < px.size(); ++i) s.add(std::max(0.0, c * px[i] - py[i]));
    return s.value() / (1.0 + c) - target;
  };
  auto g2 = [&](double c) {
    CompensatedSum s;
    for (std::size_t i = 0; i < px.size(); ++i) s.add(std::max(0.0, py[i] - c * px[i]));
    return s.value() / (1.0 + c) - target;
  };
  constexpr double lo = 1e-12, hi = 1e12;
  HuberClamp out;
  const bool root1 = g1(lo) <= 0.0 && g1(hi) >= 0.0;
  const bool root2 = g2(lo) >= 0.0 && g2(hi) <= 0.0;
  if (!(eps > 0.0) || !root1 || !root2) {
    out.fallback = true;
    return out;
  }
  out.c1 = bisect(g1, lo, hi, 1e-15, true);
  out.c2 = bisect(g2, lo, hi, 1e-15, true);
  out.residual1 = g1(out.c1);
  out.residual2 = g2(out.c2);
  if (out.c1 >= out.c2) out.fallback = true;
  return out;
}

/// sum_j -log clamp(L(Z_j), c1, c2); decision 0 iff the sum is >= 0.
/// Falls back to the unclamped ratio of the estimates when the clamp
/// equations have no admissible solution.
inline BaselineResult huber_test(const DensityEstimatePair& est, const SampleSet& z, double eps) {
  require(z.kind == SampleKind::Discrete && z.dim <= est.phat_x.size(), "Z must be discrete on the estimate alphabet");
  const auto clamp = huber_clamp(est, eps);
  BaselineResult r;
  CompensatedSum s;
  for (auto b : z.bins) {
    double l = est.phat_y[b] / est.phat_x[b];
    if (!clamp.fallback) l = std::clamp(l, clamp.c1, clamp.c2);
    s.add(-std::log(l));
  }
  if (clamp.fallback) r.warnings.push_back("Huber clamp equations have no admissible root; likelihood-ratio fallback");
  r.statistic = s.value();
  r.threshold = 0.0;
  r.decision = r.statistic >= 0.0 ? 0 : 1;
  return r;
}

// ---------------------------------------------------------------------------
// Birge's test along the sphere geodesic between root-densities.

struct Geodesic {
  std::vector<double> root_x;
  std::vector<double> root_y;
  double omega = 0.0;

  /// gamma_t = [sin((1-t) omega) sqrt px + sin(t omega) sqrt py] / sin omega.
  std::vector<double> at(double t) const {
    std::vector<double> g(root_x.size());
    const double a = std::sin((1.0 - t) * omega) / std::sin(omega);
    const double b = std::sin(t * omega) / std::sin(omega);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = a * root_x[i] + b * root_y[i];
    return g;
  }
};

inline Geodesic birge_geodesic(const DensityEstimatePair& est) {
  check_same_alphabet(est.phat_x, est.phat_y);
  Geodesic g;
  const std::size_t k = est.phat_x.size();
  g.root_x.resize(k);
  g.root_y.resize(k);
  CompensatedSum inner;
  for (std::size_t i = 0; i < k; ++i) {
    g.root_x[i] = std::sqrt(est.phat_x[i]);
    g.root_y[i] = std::sqrt(est.phat_y[i]);
    inner.add(g.root_x[i] * g.root_y[i]);
  }
  g.omega = std::acos(std::clamp(inner.value(), -1.0, 1.0));
  if (!(g.omega > 0.0)) throw DegenerateEstimates("Birge test: estimates coincide (omega = 0)");
  return g;
}

inline BaselineResult birge_test(const DensityEstimatePair& est, const SampleSet& z) {
  require(z.kind == SampleKind::Discrete && z.dim <= est.phat_x.size(), "Z must be discrete on the estimate alphabet");
  const auto geo = birge_geodesic(est);
  const auto g1 = geo.at(1.0 / 3.0);
  const auto g2 = geo.at(2.0 / 3.0);
  detail::LogRatioSum acc;
  for (auto b : z.bins) acc.add(detail::log_ratio(g1[b] * g1[b], g2[b] * g2[b]));
  BaselineResult r;
  r.statistic = acc.value();
  r.decision = r.statistic >= 0.0 ? 0 : 1;
  return r;
}

// ---------------------------------------------------------------------------
// Permutation p-value

struct PermutationResult {
  double p_value = 1.0;
  double t_obs = 0.0;
  std::size_t permutations = 0;
};

/// How permuted statistics equal to the observed one are counted.
/// Conservative counts every tie against the observed value, so
/// p = (1 + #{T_i >= T}) / (P + 1). Randomized gives the observed value a
/// uniformly random rank among its ties, which makes p exactly uniform on
/// {1, ..., P+1}/(P+1) under exchangeability even for a lattice statistic.
enum class TieRule : std::uint8_t { Randomized, Conservative };

/// Pools X and Z, reshuffles with sizes preserved and recomputes the
/// statistic with Y fixed.
inline PermutationResult permutation_pvalue(const SampleSet& x, const SampleSet& y, const SampleSet& z,
                                            std::size_t permutations, std::uint64_t seed, std::size_t k = 0,
                                            TieRule ties_rule = TieRule::Randomized) {
  require(permutations >= 19, "need at least 19 permutations");
  require(x.kind == SampleKind::Discrete && y.kind == SampleKind::Discrete && z.kind == SampleKind::Discrete,
          "permutation p-value needs discrete (or binned) samples");
  require(x.count() == y.count() && x.count() >= 2 && z.count() >= 1, "sample size preconditions");
  if (k == 0) k = std::max({x.dim, y.dim, z.dim});
  const std::size_t n = x.count();
  std::vector<std::uint32_t> pooled(x.bins);
  pooled.insert(pooled.end(), z.bins.begin(), z.bins.end());
  std::vector<std::int64_t> cx, cy, cz;
  const __int128 t_obs = detail::scaled_discrete_stat(x.bins, y.bins, z.bins, k, cx, cy, cz);
  Philox rng(derive_seed(seed, "permutation"));
  std::size_t gt = 0, ties = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    rng.shuffle(std::span<std::uint32_t>(pooled));
    const std::span<const std::uint32_t> all(pooled);
    const __int128 t = detail::scaled_discrete_stat(all.first(n), y.bins, all.subspan(n), k, cx, cy, cz);
    gt += t > t_obs ? 1 : 0;
    ties += t == t_obs ? 1 : 0;
  }
  const std::size_t ge =
      gt + (ties_rule == TieRule::Conservative ? ties : static_cast<std::size_t>(rng.below(ties + 1)));
  PermutationResult r;
  r.permutations = permutations;
  r.t_obs = detail::discrete_stat(x.bins, y.bins, z.bins, k);
  r.p_value = static_cast<double>(1 + ge) / static_cast<double>(permutations + 1);
  return r;
}

// ---------------------------------------------------------------------------
// Majority vote over disjoint splits

using SeededLfhtTest =
    std::function<int(const SampleSet& x, const SampleSet& y, const SampleSet& z, std::uint64_t seed)>;

inline int majority_vote(const SeededLfhtTest& test, std::size_t splits, const SampleSet& x, const SampleSet& y,
                         const SampleSet& z, std::uint64_t seed) {
  require(splits % 2 == 1, "number of splits must be odd");
  const std::size_t n = std::min(x.count(), y.count()) / splits;
  const std::size_t m = z.count() / splits;
  require(n >= 1 && m >= 1, "insufficient samples for the requested splits");
  std::size_t ones = 0;
  for (std::size_t s = 0; s < splits; ++s)
    ones += test(x.slice(s * n, n), y.slice(s * n, n), z.slice(s * m, m), derive_seed(seed, {s})) ? 1 : 0;
  return 2 * ones > splits ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Reductions between testing problems

using SampleSource = std::function<SampleSet(std::size_t count, std::uint64_t seed)>;

struct ReductionResult {
  int decision = 0;  // 1: reject P_X = P_0 (resp. P_X = P_Y)
  double mean_a = 0.0;
  std::vector<int> a;
};

/// Goodness of fit from a likelihood-free test. `x` holds c batches of n
/// observations from the unknown P_X; Y and Z batches come from P_0.
/// A_i = test(X^i, Y^i, Z^i) - test(X^i, Y^i, X^{i+1}_{1:m}), i odd.
inline ReductionResult gof_via_lfht(const LfhtTest& test, const SampleSet& x, const SampleSource& p0, std::size_t n,
                                    std::size_t m, std::uint64_t seed) {
  require(n >= 1 && m >= 1 && m <= n, "goodness-of-fit reduction needs 1 <= m <= n");
  const std::size_t c = x.count() / n;
  require(c >= 2, "insufficient batches: need at least two batches of X");
  ReductionResult r;
  for (std::size_t i = 0; i + 1 < c; i += 2) {
    const auto xi = x.slice(i * n, n);
    const auto xnext = x.slice((i + 1) * n, m);
    const auto yi = p0(n, derive_seed(seed, {i, 0})).with_source(Source::Y);
    const auto zi = p0(m, derive_seed(seed, {i, 1})).with_source(Source::Z);
    r.a.push_back(test(xi, yi, zi) - test(xi, yi, xnext.with_source(Source::Z)));
  }
  double sum = 0.0;
  for (int v : r.a) sum += v;
  r.mean_a = sum / static_cast<double>(r.a.size());
  r.decision = r.mean_a >= 1.0 / 6.0 ? 1 : 0;
  return r;
}

/// Two-sample test from a likelihood-free test. `x` holds c batches of n,
/// `y` holds c batches of m >= n.
/// A_i = test(X^i, Y^i_{1:n}, Y^{i+1}) - test(Y^i_{1:n}, X^i, Y^{i+1}), i odd.
inline ReductionResult ts_via_lfht(const LfhtTest& test, const SampleSet& x, const SampleSet& y, std::size_t n,
                                   std::size_t m) {
  require(n >= 1 && m >= n, "two-sample reduction needs 1 <= n <= m");
  const std::size_t c = std::min(x.count() / n, y.count() / m);
  require(c >= 2, "insufficient batches: need at least two batches of each sample");
  ReductionResult r;
  for (std::size_t i = 0; i + 1 < c; i += 2) {
    const auto xi = x.slice(i * n, n);
    const auto yi = y.slice(i * m, n);
    const auto ynext = y.slice((i + 1) * m, m).with_source(Source::Z);
    r.a.push_back(test(xi, yi.with_source(Source::Y), ynext) -
                  test(yi.with_source(Source::X), xi.with_source(Source::Y), ynext));
  }
  double sum = 0.0;
  for (int v : r.a) sum += v;
  r.mean_a = sum / static_cast<double>(r.a.size());
  r.decision = r.mean_a >= 1.0 / 6.0 ? 1 : 0;
  return r;
}

/// Likelihood-free test from a two-sample test: ignore Y and ask whether
/// X and Z differ.
inline int lfht_via_ts(const TwoSampleTest& ts, const SampleSet& x, const SampleSet& y, const SampleSet& z) {
  (void)y;
  return ts(x, z);
}

}  // namespace lfht
