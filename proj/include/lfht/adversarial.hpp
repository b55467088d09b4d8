#pragma once

// Hard instance generators, fingerprints and moment machinery, and the
// closed-form mixture-divergence diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lfht/bump.hpp"
#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

namespace lfht {

using Distribution = std::variant<DiscretePmf, SmoothBumpDensity, GaussianSequenceSpec>;

inline SampleSet sample(const Distribution& dist, std::size_t n, std::uint64_t seed,
                        Source src = Source::X) {
  return std::visit([&](const auto& d) { return sample(d, n, seed, src); }, dist);
}

enum class ClassTag : std::uint8_t { PD, PDb, PH, PG };
enum class Truth : std::uint8_t { Null, Alt };

inline const char* to_string(ClassTag c) {
  switch (c) {
    case ClassTag::PD: return "P_D";
    case ClassTag::PDb: return "P_Db";
    case ClassTag::PH: return "P_H";
    case ClassTag::PG: return "P_G";
  }
  return "?";
}

struct LfhtInstance {
  ClassTag class_tag = ClassTag::PDb;
  Distribution px;
  Distribution py;
  double eps = 0.0;  // recorded separation
  Truth truth = Truth::Null;
  std::map<std::string, double> metadata;

  const Distribution& pz() const noexcept { return truth == Truth::Null ? px : py; }
};

/// Separation actually realized: exact TV for pmfs, quadrature TV for bumps,
/// certified lower bound for Gaussian sequences.
inline double measured_separation(const LfhtInstance& inst) {
  if (const auto* p = std::get_if<DiscretePmf>(&inst.px)) return tv(*p, std::get<DiscretePmf>(inst.py));
  if (const auto* f = std::get_if<SmoothBumpDensity>(&inst.px))
    return tv_quadrature(*f, std::get<SmoothBumpDensity>(inst.py));
  const auto& gx = std::get<GaussianSequenceSpec>(inst.px);
  const auto& gy = std::get<GaussianSequenceSpec>(inst.py);
  return gaussian_divergences(gx.theta, gy.theta).tv_lower;
}

inline std::vector<std::int8_t> random_signs(std::size_t len, std::uint64_t seed) {
  Philox rng(seed);
  std::vector<std::int8_t> eta(len);
  for (auto& e : eta) e = (rng() >> 63) ? 1 : -1;
  return eta;
}

// ---------------------------------------------------------------------------
// Paired-bin perturbation of the uniform pmf on 2k bins.

struct PmfPair {
  DiscretePmf first;
  DiscretePmf second;
};

inline PmfPair paninski_pair(std::size_t k, double eps, std::span<const std::int8_t> eta) {
  if (k < 1) throw ConstructionError("half-alphabet must be >= 1");
  if (!(eps >= 0.0 && eps < 1.0)) throw ConstructionError("eps must be in [0,1)");
  if (eta.size() != k) throw ConstructionError("eta must have k entries");
  std::vector<double> w(2 * k);
  for (std::size_t j = 0; j < k; ++j) {
    if (eta[j] != 1 && eta[j] != -1) throw ConstructionError("eta entries must be +-1");
    w[2 * j] = (1.0 + eta[j] * eps) / (2.0 * static_cast<double>(k));
    w[2 * j + 1] = (1.0 - eta[j] * eps) / (2.0 * static_cast<double>(k));
  }
  return {DiscretePmf::uniform(2 * k), DiscretePmf::from_weights(std::move(w))};
}

inline PmfPair paninski_pair(std::size_t k, double eps, std::uint64_t seed) {
  const auto eta = random_signs(k, derive_seed(seed, "paninski-eta"));
  return paninski_pair(k, eps, eta);
}

// ---------------------------------------------------------------------------
// Smooth bump pairs

struct BumpPair {
  SmoothBumpDensity first;
  SmoothBumpDensity second;
};

/// Uniform density against f_eta = 1 + rho sum eta_j h_j with TV = eps when
/// every eta_j is nonzero. kappa is the largest grid keeping f_eta inside
/// the Holder ball of radius C; rho fixes the L1 distance.
inline BumpPair smooth_bump_pair(double beta, std::size_t d, double c_holder, double eps,
                                 std::optional<std::vector<std::int8_t>> eta, std::uint64_t seed = 0) {
  if (!(beta > 0.0 && beta < 5.0)) throw ConstructionError("beta must be in (0,5) for this bump profile");
  if (!(eps > 0.0 && eps < 1.0)) throw ConstructionError("eps must be in (0,1)");
  if (!(c_holder > 0.0)) throw ConstructionError("C must be > 0");
  const double dd = static_cast<double>(d);
  const double h1 = std::pow(bump_profile::l1_norm(), dd);
  const double hinf = std::pow(bump_profile::sup_norm(), dd);
  const int s = static_cast<int>(std::floor(beta));
  const double hc = std::max(4.0 * bump_profile::tensor_c_norm(s, d),
                             2.0 * bump_profile::tensor_c_norm(s + 1, d));
  const double kappa_real = std::pow(c_holder * h1 / (2.0 * eps * hc), 1.0 / beta);
  if (!(kappa_real >= 1.0)) throw ConstructionError("eps too large for the Holder radius: kappa < 1");
  if (kappa_real > 1e7) throw ConstructionError("kappa too large");
  const auto kappa = static_cast<std::size_t>(std::floor(kappa_real));
  const double scale = std::pow(static_cast<double>(kappa), 0.5 * dd);
  const double rho = 2.0 * eps / (h1 * scale);
  if (rho * scale * hinf > 0.5)
    throw ConstructionError("eps too large for positivity: need eps <= |h|_1 / (4 |h|_inf)");
  const std::size_t cells = ipow(kappa, d);
  std::vector<std::int8_t> signs = eta ? std::move(*eta) : random_signs(cells, derive_seed(seed, "bump-eta"));
  if (signs.size() != cells) throw ConstructionError("eta must have kappa^d entries");
  auto f = SmoothBumpDensity::make({.d = d, .beta = beta, .kappa = kappa, .rho = rho, .eta = std::move(signs)});
  return {SmoothBumpDensity::uniform(d, beta), std::move(f)};
}

/// Cells whose axis-0 index keeps them inside the slab x_0 <= 1/3.
inline std::size_t slab_width(std::size_t kappa) { return kappa / 3; }

/// Floored base f0 = eps^2 + phi(x_0)/|phi|_1 (1 - eps^2) against the same
/// base plus bumps on the slab where f0 = eps^2.
inline BumpPair hellinger_floor_pair(double beta, std::size_t d, double eps,
                                     std::optional<std::vector<std::int8_t>> eta, std::uint64_t seed = 0) {
  if (!(beta > 0.0)) throw ConstructionError("beta must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw ConstructionError("eps must be in (0,1)");
  const double dd = static_cast<double>(d);
  const double kr = std::ceil(std::pow(eps, -2.0 / beta));
  if (!(kr < 1e6)) throw ConstructionError("kappa too large");
  const std::size_t kappa = std::max<std::size_t>(3, static_cast<std::size_t>(kr));
  if (std::pow(static_cast<double>(kappa), dd) > 2e7) throw ConstructionError("kappa^d too large");
  const std::size_t cells = ipow(kappa, d);
  const double scale = std::pow(static_cast<double>(kappa), 0.5 * dd);
  const double rho = eps * eps / (2.0 * std::pow(bump_profile::sup_norm(), dd) * scale);
  const std::size_t slab = slab_width(kappa);
  std::vector<std::int8_t> signs;
  if (eta) {
    signs = std::move(*eta);
    if (signs.size() != cells) throw ConstructionError("eta must have kappa^d entries");
    for (std::size_t i = 0; i < cells; ++i)
      if (signs[i] != 0 && i % kappa >= slab) throw ConstructionError("eta must vanish outside the slab");
  } else {
    signs = random_signs(cells, derive_seed(seed, "floor-eta"));
    for (std::size_t i = 0; i < cells; ++i)
      if (i % kappa >= slab) signs[i] = 0;
  }
  SmoothBumpDensity::Params base{.d = d, .beta = beta, .kappa = kappa, .rho = 0.0, .eta = {},
                                 .base = BaseKind::Eps2Floor, .base_eps = eps};
  auto bumped = base;
  bumped.rho = rho;
  bumped.eta = std::move(signs);
  return {SmoothBumpDensity::make(std::move(base)), SmoothBumpDensity::make(std::move(bumped))};
}

/// Certified lower bound on H^2 for a floored pair: on the slab
/// |bump| <= eps^2/2 gives (sqrt(eps^2+b) - eps)^2 >= b^2/(5 eps^2).
inline double hellinger_floor_lower_bound(const SmoothBumpDensity& f_eta) {
  std::size_t active = 0;
  for (auto e : f_eta.eta()) active += e != 0;
  const double e2 = f_eta.base_eps() * f_eta.base_eps();
  return f_eta.rho() * f_eta.rho() * static_cast<double>(active) / (5.0 * e2);
}

// ---------------------------------------------------------------------------
// Gaussian sequence prior

struct GaussianPriorShape {
  double c1 = 0.0;
  double c2 = 0.0;
  std::size_t support = 0;
  std::vector<double> gamma;
};

/// Prior variances: c1 c2 = 2 and 100 c1 c2^{2s+1} = C; support length
/// floor(c2 eps^{-1/s}) (at least 1) with equal variances summing to 2 eps^2.
inline GaussianPriorShape gaussian_prior_shape(double s, double c_sob, double eps) {
  if (!(s > 0.0 && c_sob > 0.0)) throw ConstructionError("s and C must be > 0");
  if (!(eps > 0.0 && eps < 1.0)) throw ConstructionError("eps must be in (0,1)");
  GaussianPriorShape out;
  out.c2 = std::pow(c_sob / 200.0, 1.0 / (2.0 * s));
  out.c1 = 2.0 / out.c2;
  if (!(std::isfinite(out.c1) && out.c1 > 0.0)) throw ConstructionError("no feasible prior constants");
  const double len = std::floor(out.c2 * std::pow(eps, -1.0 / s));
  if (len > 1e7) throw ConstructionError("prior support too long");
  out.support = std::max<std::size_t>(1, static_cast<std::size_t>(len));
  out.gamma.assign(out.support, 2.0 * eps * eps / static_cast<double>(out.support));
  return out;
}

inline bool gaussian_prior_valid(const GaussianSequenceSpec& g) {
  CompensatedSum norm;
  for (double t : g.theta) norm.add(t * t);
  return g.in_ellipsoid() && norm.value() >= 0.5 * compensated_sum(g.gamma);
}

inline GaussianSequenceSpec draw_gaussian_prior(const GaussianPriorShape& shape, double s, double c_sob,
                                                Philox& rng) {
  GaussianSequenceSpec g;
  g.s = s;
  g.c_sob = c_sob;
  g.gamma = shape.gamma;
  g.theta.resize(shape.support);
  for (std::size_t j = 0; j < shape.support; ++j) g.theta[j] = std::sqrt(shape.gamma[j]) * rng.normal();
  return g;
}

/// Null N(0, I) against N(theta, I) with theta drawn from the prior,
/// redrawn until valid (at most 1000 attempts).
inline LfhtInstance gaussian_prior_instance(double s, double c_sob, double eps, std::uint64_t seed) {
  const auto shape = gaussian_prior_shape(s, c_sob, eps);
  Philox rng(derive_seed(seed, "gaussian-prior"));
  for (int attempt = 1; attempt <= 1000; ++attempt) {
    auto g = draw_gaussian_prior(shape, s, c_sob, rng);
    if (!gaussian_prior_valid(g)) continue;
    GaussianSequenceSpec null_spec;
    null_spec.theta.assign(shape.support, 0.0);
    null_spec.s = s;
    null_spec.c_sob = c_sob;
    LfhtInstance inst;
    inst.class_tag = ClassTag::PG;
    inst.eps = gaussian_divergences(null_spec.theta, g.theta).tv_lower;
    inst.metadata = {{"s", s}, {"C", c_sob}, {"eps_target", eps}, {"c1", shape.c1}, {"c2", shape.c2},
                     {"r", static_cast<double>(shape.support)}, {"attempts", attempt}};
    inst.px = std::move(null_spec);
    inst.py = std::move(g);
    return inst;
  }
  throw ConstructionError("gaussian prior: no valid draw within 1000 attempts");
}

/// Fraction of prior draws passing the validity check.
inline double gaussian_prior_acceptance(double s, double c_sob, double eps, std::size_t draws,
                                        std::uint64_t seed) {
  const auto shape = gaussian_prior_shape(s, c_sob, eps);
  Philox rng(seed);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < draws; ++i) ok += gaussian_prior_valid(draw_gaussian_prior(shape, s, c_sob, rng));
  return static_cast<double>(ok) / static_cast<double>(draws);
}

// ---------------------------------------------------------------------------
// Heavy/light construction with disjoint light parts.

struct ValiantLayout {
  std::size_t heavy = 0;      // gamma
  std::size_t light = 0;      // light bins per pmf
  std::size_t p_light_at = 0; // first light bin of p
  std::size_t q_light_at = 0; // first light bin of q
};

inline ValiantLayout valiant_layout(std::size_t k, std::size_t n, std::size_t m, double eta_v = 0.01) {
  if (m > n) throw ConstructionError("valiant pair needs m <= n");
  if (!(eta_v > 0.0)) throw ConstructionError("eta_V must be > 0");
  ValiantLayout l;
  l.heavy = static_cast<std::size_t>(std::llround(static_cast<double>(n) / eta_v));
  if (l.heavy < 1 || l.heavy > k / 2) throw ConstructionError("valiant pair needs 1 <= n/eta_V <= k/2");
  l.p_light_at = k / 2;
  l.q_light_at = 3 * k / 4;
  l.light = std::min(l.q_light_at - l.p_light_at, k - l.q_light_at);
  if (l.light < 1) throw ConstructionError("alphabet too small for light bins");
  return l;
}

inline PmfPair valiant_pair(std::size_t k, std::size_t n, std::size_t m, double eps, double eta_v = 0.01) {
  if (!(eps > 0.0 && eps < 0.5)) throw ConstructionError("eps must be in (0, 1/2)");
  const auto l = valiant_layout(k, n, m, eta_v);
  std::vector<double> p(k, 0.0);
  std::vector<double> q(k, 0.0);
  for (std::size_t i = 0; i < l.heavy; ++i) p[i] = q[i] = (1.0 - eps) / static_cast<double>(l.heavy);
  for (std::size_t i = 0; i < l.light; ++i) {
    p[l.p_light_at + i] = eps / static_cast<double>(l.light);
    q[l.q_light_at + i] = eps / static_cast<double>(l.light);
  }
  return {DiscretePmf::from_weights(std::move(p)), DiscretePmf::from_weights(std::move(q))};
}

// ---------------------------------------------------------------------------
// Fingerprints and moments

using CountTuple = std::vector<std::uint64_t>;

struct Fingerprint {
  std::map<CountTuple, std::uint64_t> counts;
  std::size_t ell = 0;
  std::vector<std::size_t> sizes;

  std::uint64_t total_bins() const {
    std::uint64_t t = 0;
    for (const auto& [_, c] : counts) t += c;
    return t;
  }
  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

inline Fingerprint fingerprint(std::span<const SampleSet> samples, std::size_t k) {
  Fingerprint fp;
  fp.ell = samples.size();
  std::vector<std::vector<std::uint64_t>> per(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    per[s] = bin_counts(samples[s], k);
    fp.sizes.push_back(samples[s].count());
  }
  CountTuple t(samples.size());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t s = 0; s < samples.size(); ++s) t[s] = per[s][i];
    ++fp.counts[t];
  }
  return fp;
}

/// m(a) = sum_i prod_j (n_j p_j(i))^{a_j}.
inline double moments(std::span<const DiscretePmf> dists, std::span<const double> sizes,
                      std::span<const unsigned> a) {
  require(dists.size() == sizes.size() && sizes.size() == a.size(), "moment arity mismatch");
  require(!dists.empty(), "moments need at least one pmf");
  const std::size_t k = dists[0].size();
  for (const auto& p : dists) require(p.size() == k, "alphabet mismatch");
  CompensatedSum acc;
  for (std::size_t i = 0; i < k; ++i) {
    double term = 1.0;
    for (std::size_t j = 0; j < dists.size(); ++j) term *= std::pow(sizes[j] * dists[j][i], static_cast<double>(a[j]));
    acc.add(term);
  }
  return acc.value();
}

// ---------------------------------------------------------------------------
// Mixture-divergence diagnostics

/// Exponent of the chi^2 bound for the bump mixture: n^2 rho^4 kappa^d.
inline double ingster_chi2_exponent(double n, double rho, double kappa, double d) {
  return n * n * std::pow(rho, 4) * std::pow(kappa, d);
}

inline double gaussian_gof_kl(double n, std::span<const double> gamma) {
  CompensatedSum acc;
  for (double g : gamma) acc.add(-n * g / (n * g + 1.0) + std::log1p(n * g));
  return 0.5 * acc.value();
}

inline double gaussian_lfht_kl(double n, double m, std::span<const double> gamma) {
  CompensatedSum acc;
  for (double g : gamma) acc.add(g * m - std::log1p(g * m / (g * (n + m) + 1.0)));
  return 0.5 * acc.value();
}

// ---------------------------------------------------------------------------
// Monte Carlo check of E prod_j (a + b (1+c)^{N_j}) <= (a + b e^{cn/k})^k
// for (N_1..N_k) ~ Multinomial(n, uniform).

struct MultinomialBoundCheck {
  double mean = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool holds = false;
};

inline MultinomialBoundCheck multinomial_product_check(double a, double b, double c, std::size_t n,
                                                       std::size_t k, std::size_t draws, std::uint64_t seed) {
  Philox rng(seed);
  std::vector<unsigned> counts(k);
  std::vector<double> factor(n + 1);
  for (std::size_t j = 0; j <= n; ++j) factor[j] = a + b * std::pow(1.0 + c, static_cast<double>(j));
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (std::size_t t = 0; t < draws; ++t) {
    std::fill(counts.begin(), counts.end(), 0u);
    for (std::size_t i = 0; i < n; ++i) ++counts[rng.below(k)];
    double prod = 1.0;
    for (auto cnt : counts) prod *= factor[cnt];
    sum.add(prod);
    sum_sq.add(prod * prod);
  }
  MultinomialBoundCheck out;
  const double dn = static_cast<double>(draws);
  out.mean = sum.value() / dn;
  const double var = std::max(0.0, sum_sq.value() / dn - out.mean * out.mean) * dn / (dn - 1.0);
  out.se = std::sqrt(var / dn);
  out.bound = std::pow(a + b * std::exp(c * static_cast<double>(n) / static_cast<double>(k)), static_cast<double>(k));
  out.holds = out.mean <= out.bound * (1.0 + 1e-12) + 5.0 * out.se;
  return out;
}

}  // namespace lfht
