#pragma once

// Projected L2 statistics for likelihood-free testing: empirical
// projections, the difference-of-distances statistic, its exact mean and
// variance assembly, class-specific tests and the flattening pipeline.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lfht/adversarial.hpp"
#include "lfht/bump.hpp"
#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

namespace lfht {

struct ProjectionBasis {
  enum class Kind : std::uint8_t { DiscreteIdentity, CubeHistogram, GaussianCoordinates };
  Kind kind = Kind::DiscreteIdentity;
  std::size_t k = 0;      // alphabet size
  std::size_t kappa = 0;  // cells per axis
  std::size_t d = 0;
  std::size_t r = 0;      // number of Gaussian coordinates

  static ProjectionBasis discrete(std::size_t k) { return {Kind::DiscreteIdentity, k, 0, 0, 0}; }
  static ProjectionBasis histogram(std::size_t kappa, std::size_t d) {
    return {Kind::CubeHistogram, 0, kappa, d, 0};
  }
  static ProjectionBasis gaussian(std::size_t r) { return {Kind::GaussianCoordinates, 0, 0, 0, r}; }

  /// Number of basis functions.
  std::size_t dim() const noexcept {
    switch (kind) {
      case Kind::DiscreteIdentity: return k;
      case Kind::CubeHistogram: return ipow(kappa, d);
      case Kind::GaussianCoordinates: return r;
    }
    return 0;
  }

  friend bool operator==(const ProjectionBasis&, const ProjectionBasis&) = default;
};

inline const char* to_string(ProjectionBasis::Kind k) {
  switch (k) {
    case ProjectionBasis::Kind::DiscreteIdentity: return "discrete";
    case ProjectionBasis::Kind::CubeHistogram: return "histogram";
    case ProjectionBasis::Kind::GaussianCoordinates: return "gaussian";
  }
  return "?";
}

inline void check_basis(const SampleSet& s, const ProjectionBasis& b) {
  switch (b.kind) {
    case ProjectionBasis::Kind::DiscreteIdentity:
      require(s.kind == SampleKind::Discrete && s.dim <= b.k, "sample is not discrete on the basis alphabet");
      break;
    case ProjectionBasis::Kind::CubeHistogram:
      require(s.kind == SampleKind::Cube && s.dim == b.d, "sample is not a cube sample of matching dimension");
      break;
    case ProjectionBasis::Kind::GaussianCoordinates:
      require(s.kind == SampleKind::Sequence && s.dim >= b.r, "sequence sample shorter than r");
      break;
  }
}

/// Coordinates (1/n) sum_j phi_i(X_j).
inline std::vector<double> empirical_projection(const SampleSet& s, const ProjectionBasis& b) {
  check_basis(s, b);
  require(s.count() >= 1, "projection of an empty sample");
  const double n = static_cast<double>(s.count());
  std::vector<double> out(b.dim(), 0.0);
  switch (b.kind) {
    case ProjectionBasis::Kind::DiscreteIdentity:
      for (auto x : s.bins) out[x] += 1.0;
      for (auto& v : out) v /= n;
      break;
    case ProjectionBasis::Kind::CubeHistogram: {
      const double scale = std::pow(static_cast<double>(b.kappa), 0.5 * static_cast<double>(b.d));
      for (std::size_t i = 0; i < s.count(); ++i) out[cube_cell(s.point(i), b.kappa)] += 1.0;
      for (auto& v : out) v = v * scale / n;
      break;
    }
    case ProjectionBasis::Kind::GaussianCoordinates: {
      std::vector<CompensatedSum> acc(b.r);
      for (std::size_t i = 0; i < s.count(); ++i) {
        const auto p = s.point(i);
        for (std::size_t j = 0; j < b.r; ++j) acc[j].add(p[j]);
      }
      for (std::size_t j = 0; j < b.r; ++j) out[j] = acc[j].value() / n;
      break;
    }
  }
  return out;
}

struct StatReport {
  double t_lf = 0.0;
  double t_lf_nodiag = 0.0;
  double diagonal = 0.0;
  int decision = 0;  // 0: Z from P_X
  bool with_diagonal = false;  // which statistic the decision thresholds
  ProjectionBasis basis;
  // pipeline annotations (flattened test only)
  bool aborted = false;
  int early_exit = 0;  // 0 none, 1 X-norm large, 2 Y-norm large
  double norm_x = 0.0;
  double norm_y = 0.0;
  std::size_t alphabet = 0;
  std::vector<std::string> warnings;
};

inline int decide(double statistic) noexcept { return statistic > 0.0 ? 1 : 0; }

namespace detail {

/// Exact n^2 m T for discrete counts:
/// T = sum_i (cx-cy)/n * ((cx+cy)/n - 2 cz/m).
inline __int128 scaled_discrete_stat(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y,
                                     std::span<const std::uint32_t> z, std::size_t k,
                                     std::vector<std::int64_t>& cx, std::vector<std::int64_t>& cy,
                                     std::vector<std::int64_t>& cz) {
  cx.assign(k, 0);
  cy.assign(k, 0);
  cz.assign(k, 0);
  for (auto v : x) ++cx[v];
  for (auto v : y) ++cy[v];
  for (auto v : z) ++cz[v];
  const auto n = static_cast<__int128>(x.size());
  const auto m = static_cast<__int128>(z.size());
  __int128 s = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const __int128 diff = cx[i] - cy[i];
    if (diff != 0) s += diff * (m * (cx[i] + cy[i]) - 2 * n * cz[i]);
  }
  return s;
}

inline double discrete_stat(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y,
                            std::span<const std::uint32_t> z, std::size_t k) {
  std::vector<std::int64_t> cx, cy, cz;
  const __int128 s = scaled_discrete_stat(x, y, z, k, cx, cy, cz);
  const long double denom = static_cast<long double>(x.size()) * static_cast<long double>(x.size()) *
                            static_cast<long double>(z.size());
  return static_cast<double>(static_cast<long double>(s) / denom);
}

}  // namespace detail

/// T = |P X - P Z|^2 - |P Y - P Z|^2 and its diagonal-free version.
/// The decision thresholds t_lf_nodiag unless `with_diagonal` is set;
/// ties go to 0.
inline StatReport t_lf(const SampleSet& x, const SampleSet& y, const SampleSet& z, const ProjectionBasis& b,
                       bool with_diagonal = false) {
  check_basis(x, b);
  check_basis(y, b);
  check_basis(z, b);
  require(x.count() == y.count(), "X and Y must have equal sizes");
  require(x.count() >= 2, "need n >= 2");
  require(z.count() >= 1, "need m >= 1");
  StatReport r;
  r.basis = b;
  r.with_diagonal = with_diagonal;
  switch (b.kind) {
    case ProjectionBasis::Kind::DiscreteIdentity:
      r.t_lf = detail::discrete_stat(x.bins, y.bins, z.bins, b.k);
      r.t_lf_nodiag = r.t_lf;
      break;
    case ProjectionBasis::Kind::CubeHistogram: {
      const auto cells = b.dim();
      const auto bx = bin_cube_sample(x, b.kappa);
      const auto by = bin_cube_sample(y, b.kappa);
      const auto bz = bin_cube_sample(z, b.kappa);
      r.t_lf = static_cast<double>(cells) * detail::discrete_stat(bx.bins, by.bins, bz.bins, cells);
      r.t_lf_nodiag = r.t_lf;
      break;
    }
    case ProjectionBasis::Kind::GaussianCoordinates: {
      const auto px = empirical_projection(x, b);
      const auto py = empirical_projection(y, b);
      const auto pz = empirical_projection(z, b);
      CompensatedSum t;
      for (std::size_t i = 0; i < b.r; ++i) {
        const double a = px[i] - pz[i];
        const double c = py[i] - pz[i];
        t.add(a * a - c * c);
      }
      CompensatedSum sx, sy;
      for (std::size_t j = 0; j < x.count(); ++j) {
        const auto p = x.point(j);
        const auto q = y.point(j);
        for (std::size_t i = 0; i < b.r; ++i) {
          sx.add(p[i] * p[i]);
          sy.add(q[i] * q[i]);
        }
      }
      const double n = static_cast<double>(x.count());
      r.t_lf = t.value();
      r.diagonal = (sx.value() - sy.value()) / (n * n);
      r.t_lf_nodiag = r.t_lf - r.diagonal;
      break;
    }
  }
  r.decision = decide(with_diagonal ? r.t_lf : r.t_lf_nodiag);
  return r;
}

// ---------------------------------------------------------------------------
// Exact mean and variance assembly

struct VarTerms {
  double inv_n = 0.0;
  double inv_m = 0.0;
  double inv_nm = 0.0;
  double inv_n2 = 0.0;
  double inv_n3 = 0.0;
};

struct MeanVarBound {
  double mean = 0.0;
  VarTerms var_terms;
  double assembly = 0.0;   // weighted sum of the five groups
  double var_bound = 0.0;  // constant * assembly
};

/// Primitive inner products of a basis model for densities (f, g, h).
struct MomentPrimitives {
  double mean = 0.0;
  double a_ffh = 0.0, a_ggh = 0.0, a_hfg = 0.0, a_ff0 = 0.0, a_gg0 = 0.0;
  double b_ff = 0.0, b_gg = 0.0, b_fh = 0.0, b_gh = 0.0;
  double sum_norm_sq = 0.0;  // |f+g+h|_2^2
};

inline MeanVarBound assemble_mean_var(const MomentPrimitives& p, double n, double m, double constant) {
  MeanVarBound out;
  out.mean = p.mean;
  const double n4 = p.sum_norm_sq * p.sum_norm_sq;
  auto& v = out.var_terms;
  v.inv_n = p.a_ffh + p.a_ggh;
  v.inv_m = p.a_hfg;
  v.inv_nm = n4 + std::fabs(p.b_fh) + std::fabs(p.b_gh);
  v.inv_n2 = std::fabs(p.b_ff) + std::fabs(p.b_gg) + n4 + std::sqrt(p.a_ff0 * p.a_ffh + p.a_gg0 * p.a_ggh);
  v.inv_n3 = std::fabs(p.b_ff) + std::fabs(p.b_gg) + n4 + p.a_ff0 + p.a_gg0;
  out.assembly = v.inv_n / n + v.inv_m / m + v.inv_nm / (n * m) + v.inv_n2 / (n * n) + v.inv_n3 / (n * n * n);
  out.var_bound = constant * out.assembly;
  return out;
}

/// Histogram model: cell masses pf, pg, ph on r cells with orthonormal
/// indicator scale s (= kappa^d; 1 for pmfs).
inline MomentPrimitives histogram_primitives(std::span<const double> pf, std::span<const double> pg,
                                             std::span<const double> ph, double scale, double n,
                                             double sum_norm_sq) {
  require(pf.size() == pg.size() && pg.size() == ph.size(), "alphabet mismatch");
  CompensatedSum dfh, dgh, nf, ng, affh, aggh, ahfg, aff0, agg0, bff, bgg, bfh, bgh;
  for (std::size_t i = 0; i < pf.size(); ++i) {
    const double f = pf[i], g = pg[i], h = ph[i];
    dfh.add((f - h) * (f - h));
    dgh.add((g - h) * (g - h));
    nf.add(f * f);
    ng.add(g * g);
    affh.add(f * (f - h) * (f - h));
    aggh.add(g * (g - h) * (g - h));
    ahfg.add(h * (f - g) * (f - g));
    aff0.add(f * f * f);
    agg0.add(g * g * g);
    bff.add(f * f);
    bgg.add(g * g);
    bfh.add(f * h);
    bgh.add(g * h);
  }
  const double s2 = scale * scale;
  MomentPrimitives p;
  p.mean = scale * (dfh.value() - dgh.value() + (ng.value() - nf.value()) / n);
  p.a_ffh = s2 * affh.value();
  p.a_ggh = s2 * aggh.value();
  p.a_hfg = s2 * ahfg.value();
  p.a_ff0 = s2 * aff0.value();
  p.a_gg0 = s2 * agg0.value();
  p.b_ff = s2 * bff.value();
  p.b_gg = s2 * bgg.value();
  p.b_fh = s2 * bfh.value();
  p.b_gh = s2 * bgh.value();
  p.sum_norm_sq = sum_norm_sq;
  return p;
}

inline MeanVarBound mean_var_oracle(const DiscretePmf& f, const DiscretePmf& g, const DiscretePmf& h,
                                    std::size_t n, std::size_t m, double constant = 100.0) {
  check_same_alphabet(f, g);
  check_same_alphabet(f, h);
  CompensatedSum norm;
  for (std::size_t i = 0; i < f.size(); ++i) norm.add((f[i] + g[i] + h[i]) * (f[i] + g[i] + h[i]));
  const auto p = histogram_primitives(f.weights(), g.weights(), h.weights(), 1.0, double(n), norm.value());
  return assemble_mean_var(p, double(n), double(m), constant);
}

inline double l2_inner_quadrature(const SmoothBumpDensity& f, const SmoothBumpDensity& g) {
  require(f.d() == g.d(), "dimension mismatch");
  return integrate_cube([&](std::span<const double> x) { return f.density(x) * g.density(x); }, f.d(),
                        aligned_panels({&f, &g}, 2));
}

/// Histogram basis on bump densities: exact cell masses, |f+g+h|_2 by
/// quadrature.
inline MeanVarBound mean_var_oracle(const SmoothBumpDensity& f, const SmoothBumpDensity& g,
                                    const SmoothBumpDensity& h, std::size_t kappa, std::size_t n, std::size_t m,
                                    double constant = 100.0) {
  require(f.d() == g.d() && g.d() == h.d(), "dimension mismatch");
  const auto pf = project_grid(f, kappa);
  const auto pg = project_grid(g, kappa);
  const auto ph = project_grid(h, kappa);
  const SmoothBumpDensity* fs[3] = {&f, &g, &h};
  double norm = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) norm += l2_inner_quadrature(*fs[a], *fs[b]);
  const double scale = static_cast<double>(ipow(kappa, f.d()));
  const auto p = histogram_primitives(pf.weights(), pg.weights(), ph.weights(), scale, double(n), norm);
  return assemble_mean_var(p, double(n), double(m), constant);
}

/// Gaussian coordinate basis, densities N(theta, I) relative to N(0, I).
inline MeanVarBound mean_var_oracle(std::span<const double> tf, std::span<const double> tg,
                                    std::span<const double> th, std::size_t r, std::size_t n, std::size_t m,
                                    double constant = 100.0) {
  const std::size_t len = std::max({tf.size(), tg.size(), th.size(), r});
  auto pad = [len](std::span<const double> t) {
    std::vector<double> v(t.begin(), t.end());
    v.resize(len, 0.0);
    return v;
  };
  const auto f = pad(tf), g = pad(tg), h = pad(th);
  auto dot = [r](const std::vector<double>& a, const std::vector<double>& b) {
    CompensatedSum s;
    for (std::size_t i = 0; i < r; ++i) s.add(a[i] * b[i]);
    return s.value();
  };
  auto sub = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i] - b[i];
    return v;
  };
  // A_{uvt} = |v-t|^2 + (u.(v-t))^2 on the first r coordinates.
  auto a_term = [&](const std::vector<double>& u, const std::vector<double>& delta) {
    const double t = dot(u, delta);
    return dot(delta, delta) + t * t;
  };
  auto b_term = [&](const std::vector<double>& u, const std::vector<double>& v) {
    const double t = dot(u, v);
    return static_cast<double>(r) + dot(u, u) + dot(v, v) + t * t;
  };
  auto full_dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
    return s.value();
  };
  MomentPrimitives p;
  const auto fh = sub(f, h), gh = sub(g, h), fg = sub(f, g);
  p.mean = dot(fh, fh) - dot(gh, gh) + (dot(g, g) - dot(f, f)) / static_cast<double>(n);
  p.a_ffh = a_term(f, fh);
  p.a_ggh = a_term(g, gh);
  p.a_hfg = a_term(h, fg);
  p.a_ff0 = a_term(f, f);
  p.a_gg0 = a_term(g, g);
  p.b_ff = b_term(f, f);
  p.b_gg = b_term(g, g);
  p.b_fh = b_term(f, h);
  p.b_gh = b_term(g, h);
  const std::vector<double>* th3[3] = {&f, &g, &h};
  CompensatedSum norm;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) norm.add(std::exp(full_dot(*th3[a], *th3[b])));
  p.sum_norm_sq = norm.value();
  return assemble_mean_var(p, double(n), double(m), constant);
}

/// Expected diagonal term for the Gaussian basis: (1/n) sum_i (thX_i^2 - thY_i^2).
inline double gaussian_expected_diagonal(std::span<const double> tx, std::span<const double> ty, std::size_t r,
                                         std::size_t n) {
  CompensatedSum s;
  for (std::size_t i = 0; i < r; ++i) {
    const double a = i < tx.size() ? tx[i] : 0.0;
    const double b = i < ty.size() ? ty[i] : 0.0;
    s.add(a * a - b * b);
  }
  return s.value() / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Class-specific tests

struct ClassConfig {
  ClassTag cls = ClassTag::PDb;
  std::size_t k = 0;
  double beta = 1.0;
  std::size_t d = 1;
  double s = 1.0;
  double c_sob = 1.0;
  double eps = 0.1;
  double c_kappa = 1.0;       // kappa = ceil(c_kappa eps^{-1/beta})
  double r_multiplier = 4.0;  // r = ceil((r_multiplier C / eps)^{1/s})
  double c_norm = 4.0;        // early-exit constant of the flattened test
  bool with_diagonal = false;
};

inline std::size_t histogram_kappa(const ClassConfig& c) {
  require(c.eps > 0.0 && c.beta > 0.0, "histogram resolution needs eps, beta > 0");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(c.c_kappa * std::pow(c.eps, -1.0 / c.beta))));
}

inline std::size_t gaussian_truncation(const ClassConfig& c) {
  require(c.eps > 0.0 && c.s > 0.0, "truncation needs eps, s > 0");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::pow(c.r_multiplier * c.c_sob / c.eps, 1.0 / c.s))));
}

/// Dispatch on the class: identity basis for pmfs, kappa-histogram for
/// smooth densities, the first r coordinates for Gaussian sequences (capped
/// at the observed length).
inline StatReport lfht_test(const SampleSet& x, const SampleSet& y, const SampleSet& z, const ClassConfig& cfg) {
  switch (cfg.cls) {
    case ClassTag::PD:
    case ClassTag::PDb: {
      const std::size_t k = cfg.k ? cfg.k : x.dim;
      return t_lf(x, y, z, ProjectionBasis::discrete(k), cfg.with_diagonal);
    }
    case ClassTag::PH:
      return t_lf(x, y, z, ProjectionBasis::histogram(histogram_kappa(cfg), x.dim), cfg.with_diagonal);
    case ClassTag::PG: {
      const std::size_t r = std::min({gaussian_truncation(cfg), x.dim, y.dim, z.dim});
      return t_lf(x, y, z, ProjectionBasis::gaussian(r), cfg.with_diagonal);
    }
  }
  throw PreconditionError("unknown class");
}

// ---------------------------------------------------------------------------
// Flattening

/// Realized splitting filter: bin i of [k] becomes sub-bins
/// [offset[i], offset[i+1]) of [K].
struct FlattenFilter {
  std::vector<std::size_t> offset{0};

  std::size_t k() const noexcept { return offset.size() - 1; }
  std::size_t K() const noexcept { return offset.back(); }
  std::size_t splits(std::size_t i) const noexcept { return offset[i + 1] - offset[i]; }

  static FlattenFilter from_counts(std::span<const std::uint64_t> extra) {
    FlattenFilter f;
    f.offset.resize(extra.size() + 1);
    f.offset[0] = 0;
    for (std::size_t i = 0; i < extra.size(); ++i) f.offset[i + 1] = f.offset[i] + 1 + extra[i];
    return f;
  }

  /// F(u)_{offset_i + s} = u_i / B_i.
  std::vector<double> push_forward(std::span<const double> u) const {
    require(u.size() == k(), "push-forward alphabet mismatch");
    std::vector<double> out(K());
    for (std::size_t i = 0; i < k(); ++i) {
      const double share = u[i] / static_cast<double>(splits(i));
      for (std::size_t j = offset[i]; j < offset[i + 1]; ++j) out[j] = share;
    }
    return out;
  }

  DiscretePmf push_forward(const DiscretePmf& p) const { return DiscretePmf::from_weights(push_forward(p.weights())); }

  /// Routes an observation in bin i to a uniformly chosen sub-bin.
  std::uint32_t route(std::uint32_t bin, Philox& rng) const {
    return static_cast<std::uint32_t>(offset[bin] + rng.below(splits(bin)));
  }
};

struct FlattenResult {
  bool aborted = false;
  FlattenFilter filter;
  SampleSet x, y, z;  // remaining observations on [K]
  std::size_t used_x = 0, used_y = 0, used_z = 0;  // consumed by the filter
};

/// Poissonized filter budgets: n_X = n_Y = (n ^ k)/2, n_Z = (m ^ k)/2,
/// draw N ~ Poi(budget/2) observations from each sample to build the split.
inline FlattenResult flatten(const SampleSet& x, const SampleSet& y, const SampleSet& z, std::size_t k,
                             std::uint64_t seed) {
  for (const auto* s : {&x, &y, &z}) require(s->kind == SampleKind::Discrete && s->dim <= k, "flatten needs discrete samples on [k]");
  Philox rng(derive_seed(seed, "flatten"));
  const std::size_t n = std::min(x.count(), y.count());
  const std::size_t m = z.count();
  const double nx = 0.5 * static_cast<double>(std::min(n, k));
  const double nz = 0.5 * static_cast<double>(std::min(m, k));
  FlattenResult out;
  out.used_x = rng.poisson(nx / 2.0);
  out.used_y = rng.poisson(nx / 2.0);
  out.used_z = rng.poisson(nz / 2.0);
  if (out.used_x > x.count() || out.used_y > y.count() || out.used_z > m) {
    out.aborted = true;
    return out;
  }
  std::vector<std::uint64_t> extra(k, 0);
  for (std::size_t i = 0; i < out.used_x; ++i) ++extra[x.bins[i]];
  for (std::size_t i = 0; i < out.used_y; ++i) ++extra[y.bins[i]];
  for (std::size_t i = 0; i < out.used_z; ++i) ++extra[z.bins[i]];
  out.filter = FlattenFilter::from_counts(extra);
  auto transform = [&](const SampleSet& s, std::size_t skip) {
    std::vector<std::uint32_t> bins;
    bins.reserve(s.count() - skip);
    for (std::size_t i = skip; i < s.count(); ++i) bins.push_back(out.filter.route(s.bins[i], rng));
    return SampleSet::discrete(out.filter.K(), std::move(bins), s.source);
  };
  out.x = transform(x, out.used_x);
  out.y = transform(y, out.used_y);
  out.z = transform(z, out.used_z);
  return out;
}

/// Collision estimate of |p|_2^2: equal unordered pairs over C(t,2),
/// clamped below at 1/K.
inline double norm_estimate(const SampleSet& s, std::size_t alphabet = 0) {
  require(s.kind == SampleKind::Discrete, "norm estimate needs a discrete sample");
  require(s.count() >= 2, "norm estimate needs at least two observations");
  const std::size_t K = alphabet ? alphabet : s.dim;
  const auto c = bin_counts(s, K);
  long double pairs = 0;
  for (auto v : c) pairs += static_cast<long double>(v) * (v - 1) / 2;
  const long double t = static_cast<long double>(s.count());
  const double est = static_cast<double>(pairs / (t * (t - 1) / 2));
  return std::max(est, 1.0 / static_cast<double>(K));
}

/// Flatten, screen the flattened norms, then run the L2 test on what is left.
inline StatReport lfht_test_pd(const SampleSet& x, const SampleSet& y, const SampleSet& z, std::size_t k,
                               double eps, std::uint64_t seed, double c_norm = 4.0) {
  (void)eps;  // separation enters only through the caller's sample sizes
  require(x.count() == y.count(), "X and Y must have equal sizes");
  const std::size_t n = x.count();
  const std::size_t m = z.count();
  StatReport r;
  r.basis = ProjectionBasis::discrete(k);
  auto fl = flatten(x, y, z, k, seed);
  if (fl.aborted) {
    Philox coin(derive_seed(seed, "abort-coin"));
    r.aborted = true;
    r.decision = static_cast<int>(coin() >> 63);
    r.warnings.push_back("flattening aborted: Poisson budget exceeded the sample size; fair-coin decision");
    return r;
  }
  const std::size_t K = fl.filter.K();
  r.alphabet = K;
  r.basis = ProjectionBasis::discrete(K);
  const std::size_t rest = std::min(fl.x.count(), fl.y.count());
  const std::size_t t = std::min(n / 4, rest / 2);
  std::size_t start = 0;
  if (t >= 2) {
    r.norm_x = norm_estimate(fl.x.slice(0, t), K);
    r.norm_y = norm_estimate(fl.y.slice(0, t), K);
    start = t;
    const double tau = 1.5 * c_norm * c_norm / static_cast<double>(std::min(std::max(n, m), k));
    if (r.norm_x > tau) {
      r.early_exit = 1;
      r.decision = 1;
      return r;
    }
    if (r.norm_y > tau) {
      r.early_exit = 2;
      r.decision = 0;
      return r;
    }
  } else {
    r.warnings.push_back("too few observations for the norm screen; skipped");
  }
  const std::size_t len = rest - start;
  if (len < 2 || fl.z.count() < 1) {
    Philox coin(derive_seed(seed, "short-coin"));
    r.decision = static_cast<int>(coin() >> 63);
    r.warnings.push_back("too few observations after flattening; fair-coin decision");
    return r;
  }
  auto rep = t_lf(fl.x.slice(start, len), fl.y.slice(start, len), fl.z, ProjectionBasis::discrete(K));
  rep.alphabet = K;
  rep.norm_x = r.norm_x;
  rep.norm_y = r.norm_y;
  rep.warnings = std::move(r.warnings);
  return rep;
}

}  // namespace lfht
