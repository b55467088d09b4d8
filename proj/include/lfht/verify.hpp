#pragma once

// Oracle checks shared by the `verify` subcommand and the acceptance
// binary. Each check is deterministic given its seed and reports a one-line
// summary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lfht/adversarial.hpp"
#include "lfht/baseline.hpp"
#include "lfht/bump.hpp"
#include "lfht/dist.hpp"
#include "lfht/harness.hpp"
#include "lfht/l2_engine.hpp"
#include "lfht/numerics.hpp"
#include "lfht/rng.hpp"

namespace lfht::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

/// Random pmf with i.i.d. exponential weights (flat Dirichlet).
inline DiscretePmf random_pmf(std::size_t k, Philox& rng) {
  std::vector<double> w(k);
  for (auto& v : w) v = -std::log(rng.uniform_open());
  return DiscretePmf::from_weights(std::move(w));
}

// ---------------------------------------------------------------------------
// Mean and variance of the diagonal-free statistic by simulation

struct MeanVarMc {
  double oracle_mean = 0.0;
  double mc_mean = 0.0;
  double mc_se = 0.0;
  double mc_var = 0.0;
  double var_bound = 0.0;  // 100 x assembly
};

inline MeanVarMc mean_var_mc(const DiscretePmf& f, const DiscretePmf& g, const DiscretePmf& h, std::size_t n,
                             std::size_t m, std::size_t trials, std::uint64_t seed) {
  const std::size_t k = f.size();
  const AliasTable af(f.weights()), ag(g.weights()), ah(h.weights());
  Philox rng(seed);
  std::vector<std::uint32_t> x(n), y(n), z(m);
  std::vector<std::int64_t> cx, cy, cz;
  const double denom = static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(m);
  CompensatedSum s1, s2;
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& v : x) v = af.draw(rng);
    for (auto& v : y) v = ag.draw(rng);
    for (auto& v : z) v = ah.draw(rng);
    const double stat = static_cast<double>(detail::scaled_discrete_stat(x, y, z, k, cx, cy, cz)) / denom;
    s1.add(stat);
    s2.add(stat * stat);
  }
  MeanVarMc out;
  const double T = static_cast<double>(trials);
  out.mc_mean = s1.value() / T;
  out.mc_var = std::max(0.0, (s2.value() - T * out.mc_mean * out.mc_mean) / (T - 1.0));
  out.mc_se = std::sqrt(out.mc_var / T);
  const auto oracle = mean_var_oracle(f, g, h, n, m, 100.0);
  out.oracle_mean = oracle.mean;
  out.var_bound = oracle.var_bound;
  return out;
}

inline std::vector<MeanVarMc> mean_var_triples(std::size_t triples, std::size_t trials, std::uint64_t seed) {
  std::vector<MeanVarMc> out(triples);
  Philox rng(seed);
  std::vector<std::array<DiscretePmf, 3>> pmfs;
  for (std::size_t i = 0; i < triples; ++i)
    pmfs.push_back({random_pmf(5, rng), random_pmf(5, rng), random_pmf(5, rng)});
  for (std::size_t i = 0; i < triples; ++i)
    out[i] = mean_var_mc(pmfs[i][0], pmfs[i][1], pmfs[i][2], 8, 8, trials, derive_seed(seed, {i}));
  return out;
}

inline CheckResult check_mean_formula(const std::vector<MeanVarMc>& runs) {
  CheckResult r{"mean-formula oracle (k=5, n=m=8)"};
  std::size_t ok = 0;
  double worst = 0.0;
  for (const auto& v : runs) {
    const double zscore = std::fabs(v.mc_mean - v.oracle_mean) / v.mc_se;
    worst = std::max(worst, zscore);
    ok += zscore <= 4.0;
  }
  r.passed = ok == runs.size();
  r.detail = std::to_string(ok) + "/" + std::to_string(runs.size()) + " within 4 SE, worst |z| = " + fmt(worst);
  return r;
}

inline CheckResult check_variance_domination(const std::vector<MeanVarMc>& runs) {
  CheckResult r{"variance domination (MC var <= 100 x bound)"};
  std::size_t ok = 0;
  double worst = 0.0;
  for (const auto& v : runs) {
    worst = std::max(worst, v.mc_var / v.var_bound);
    ok += v.mc_var <= v.var_bound;
  }
  r.passed = ok * 20 >= runs.size() * 19;
  r.detail = std::to_string(ok) + "/" + std::to_string(runs.size()) + " dominated, max var/bound = " + fmt(worst);
  return r;
}

// ---------------------------------------------------------------------------
// Exact expectation by enumerating every outcome tuple

inline std::vector<double> rational_pmf(std::size_t k, int which) {
  // At most three support points each.
  static const std::vector<std::vector<double>> table[3] = {
      {{1.0 / 3, 2.0 / 3}, {1.0 / 2, 1.0 / 4, 1.0 / 4}, {1.0 / 2, 1.0 / 4, 1.0 / 4, 0.0}},
      {{3.0 / 4, 1.0 / 4}, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3}},
      {{1.0 / 2, 1.0 / 2}, {1.0 / 6, 0.0, 5.0 / 6}, {1.0 / 5, 0.0, 2.0 / 5, 2.0 / 5}}};
  return table[which][k - 2];
}

/// E[t_lf] over all (X, Y, Z) in [k]^n x [k]^n x [k]^m.
inline long double exact_expectation(std::span<const double> f, std::span<const double> g,
                                     std::span<const double> h, std::size_t n, std::size_t m) {
  const std::size_t k = f.size();
  const std::size_t len = 2 * n + m;
  std::vector<std::uint32_t> tuple(len, 0);
  std::vector<std::int64_t> cx, cy, cz;
  long double total = 0.0L;
  const long double denom = static_cast<long double>(n) * n * m;
  for (;;) {
    long double prob = 1.0L;
    for (std::size_t i = 0; i < len; ++i) {
      const auto& p = i < n ? f : (i < 2 * n ? g : h);
      prob *= p[tuple[i]];
    }
    if (prob != 0.0L) {
      const std::span<const std::uint32_t> all(tuple);
      const auto s = detail::scaled_discrete_stat(all.first(n), all.subspan(n, n), all.subspan(2 * n), k, cx, cy, cz);
      total += prob * static_cast<long double>(s) / denom;
    }
    std::size_t i = 0;
    while (i < len && ++tuple[i] == k) tuple[i++] = 0;
    if (i == len) break;
  }
  return total;
}

inline CheckResult check_exhaustive_enumeration() {
  CheckResult r{"exhaustive-enumeration oracle (k<=4, n<=3, m<=2)"};
  double worst = 0.0;
  std::size_t cases = 0;
  for (std::size_t k = 2; k <= 4; ++k)
    for (std::size_t n = 2; n <= 3; ++n)
      for (std::size_t m = 1; m <= 2; ++m) {
        const auto f = rational_pmf(k, 0), g = rational_pmf(k, 1), h = rational_pmf(k, 2);
        const long double e = exact_expectation(f, g, h, n, m);
        const auto oracle = mean_var_oracle(make_discrete_pmf(f), make_discrete_pmf(g), make_discrete_pmf(h), n, m);
        worst = std::max(worst, static_cast<double>(std::fabs(e - static_cast<long double>(oracle.mean))));
        ++cases;
      }
  r.passed = worst <= 1e-12;
  r.detail = std::to_string(cases) + " (k,n,m) cases, max |E - formula| = " + fmt(worst, 3);
  return r;
}

// ---------------------------------------------------------------------------
// Divergence chain and Hellinger tensorization

inline CheckResult check_divergence_chain(std::size_t pairs, std::uint64_t seed) {
  CheckResult r{"divergence chain and Hellinger tensorization"};
  Philox rng(seed);
  constexpr double slack = 1e-12;
  std::size_t chain_fail = 0;
  double tensor_err = 0.0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const std::size_t k = 2 + rng.below(49);
    const auto p = random_pmf(k, rng), q = random_pmf(k, rng);
    const double t = tv(p, q), h2 = hellinger_sq(p, q), kl_v = kl(p, q).value, c2 = chi2(p, q).value;
    const bool ok = 0.25 * h2 * h2 <= t * t + slack && t * t <= h2 + slack && h2 <= kl_v + slack &&
                    kl_v <= c2 + slack;
    chain_fail += !ok;
    // Product measures on {0,1}^mm by enumeration.
    const auto a = random_pmf(2, rng), b = random_pmf(2, rng);
    const double h2ab = hellinger_sq(a, b);
    for (unsigned mm = 1; mm <= 4; ++mm) {
      CompensatedSum acc;
      for (unsigned mask = 0; mask < (1u << mm); ++mask) {
        double pa = 1.0, pb = 1.0;
        for (unsigned j = 0; j < mm; ++j) {
          pa *= a[(mask >> j) & 1u];
          pb *= b[(mask >> j) & 1u];
        }
        const double dd = std::sqrt(pa) - std::sqrt(pb);
        acc.add(dd * dd);
      }
      const double formula = 2.0 - 2.0 * std::pow(1.0 - 0.5 * h2ab, mm);
      tensor_err = std::max(tensor_err, std::fabs(acc.value() - formula));
    }
  }
  r.passed = chain_fail == 0 && tensor_err <= 1e-12;
  r.detail = std::to_string(pairs - chain_fail) + "/" + std::to_string(pairs) +
             " chains hold, max tensorization error = " + fmt(tensor_err, 3);
  return r;
}

// ---------------------------------------------------------------------------
// Flattening filter invariants

inline CheckResult check_flattening(std::size_t filters, std::size_t k, std::uint64_t seed) {
  CheckResult r{"flattening preserves TV and contracts L2"};
  Philox rng(seed);
  double tv_err = 0.0;
  double l2_excess = -1.0;
  std::size_t realized = 0;
  std::size_t attempts = 0;
  while (realized < filters && attempts++ < 10 * filters) {
    const auto src = random_pmf(k, rng);
    const std::size_t n = 8 + rng.below(4 * k), m = 8 + rng.below(4 * k);
    const std::uint64_t s = rng();
    const auto fl = flatten(sample(src, n, derive_seed(s, "x")), sample(src, n, derive_seed(s, "y")),
                            sample(src, m, derive_seed(s, "z")), k, s);
    if (fl.aborted) continue;
    ++realized;
    const auto u = random_pmf(k, rng), v = random_pmf(k, rng);
    const auto fu = fl.filter.push_forward(u), fv = fl.filter.push_forward(v);
    tv_err = std::max(tv_err, std::fabs(tv(fu, fv) - tv(u, v)));
    l2_excess = std::max(l2_excess, std::sqrt(l2_distance_sq(fu.weights(), fv.weights())) -
                                        std::sqrt(l2_distance_sq(u.weights(), v.weights())));
  }
  r.passed = realized == filters && tv_err <= 1e-12 && l2_excess <= 1e-15;
  r.detail = std::to_string(realized) + " filters on k=" + std::to_string(k) + ", max |dTV| = " + fmt(tv_err, 3) +
             ", max L2 increase = " + fmt(l2_excess, 3);
  return r;
}

// ---------------------------------------------------------------------------
// Calibrated success on paired-bin instances

struct CalibrationOutcome {
  double c_found = 0.0;  // 0 when no c <= c_max succeeds
  std::vector<PhasePoint> search;
  std::vector<PhasePoint> halving;
  bool monotone = false;
};

inline ExperimentConfig paninski_config(std::size_t k, double eps, std::size_t trials, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.cls = ClassTag::PDb;
  cfg.k = k;
  cfg.eps = eps;
  cfg.instance = "paninski";
  cfg.test = TestKind::L2;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  return cfg;
}

inline CalibrationOutcome calibrate_success(std::size_t k, double eps, std::size_t trials, double c_max,
                                            double err_goal, std::uint64_t seed) {
  CalibrationOutcome out;
  const auto cfg = paninski_config(k, eps, trials, seed);
  const double e2 = eps * eps;
  const double rk = std::sqrt(static_cast<double>(k));
  std::size_t n_found = 0;
  for (double c = 1.0; c <= c_max; c *= 2.0) {
    const auto n = static_cast<std::size_t>(c * std::ceil(rk / e2));
    const auto m = static_cast<std::size_t>(c * std::ceil(1.0 / e2));
    out.search.push_back(estimate_error(cfg, n, m));
    if (out.search.back().err_total() <= err_goal) {
      out.c_found = c;
      n_found = n;
      break;
    }
  }
  if (out.c_found == 0.0) return out;
  const auto m_fixed = static_cast<std::size_t>(16.0 * std::ceil(1.0 / e2));
  for (std::size_t n = n_found; n >= 4; n /= 2) out.halving.push_back(estimate_error(cfg, n, m_fixed));
  out.monotone = true;
  for (std::size_t j = 1; j < out.halving.size(); ++j) {
    const double s1 = out.halving[j - 1].ci95 / 1.959963984540054;
    const double s2 = out.halving[j].ci95 / 1.959963984540054;
    if (out.halving[j].err_total() < out.halving[j - 1].err_total() - 3.0 * std::sqrt(s1 * s1 + s2 * s2))
      out.monotone = false;
  }
  return out;
}

inline CheckResult check_calibrated_success(std::size_t trials, std::uint64_t seed) {
  CheckResult r{"calibrated success on paired-bin instances (k=100, eps=0.3)"};
  const auto out = calibrate_success(100, 0.3, trials, 16.0, 0.2, seed);
  std::ostringstream os;
  os << "search:";
  for (const auto& p : out.search) os << " (n=" << p.n << ",m=" << p.m << ",err=" << fmt(p.err_total(), 3) << ")";
  if (out.c_found > 0.0) {
    os << "; c=" << out.c_found << "; halving n at m=16*ceil(1/eps^2):";
    for (const auto& p : out.halving) os << " " << p.n << ":" << fmt(p.err_total(), 3);
  } else {
    os << "; no c <= 16 reached err <= 0.2";
  }
  r.passed = out.c_found > 0.0 && out.monotone;
  r.detail = os.str();
  return r;
}

// ---------------------------------------------------------------------------
// Trade-off shape of the boundary curve

struct TradeoffOutcome {
  BoundaryCurve curve;
  std::optional<TradeoffSummary> summary;
};

inline ExperimentConfig tradeoff_config(std::size_t trials, std::uint64_t seed) {
  auto cfg = paninski_config(256, 0.5, trials, seed);
  cfg.n_grid = {256, 376, 551, 810, 1188, 1744, 2560};
  cfg.m_grid = {2, 4096};
  cfg.target = 0.25;
  return cfg;
}

inline TradeoffOutcome run_tradeoff(const ExperimentConfig& cfg) {
  TradeoffOutcome out;
  out.curve = find_boundary(cfg, cfg.target);
  try {
    out.summary = tradeoff_report(out.curve);
  } catch (const PreconditionError&) {
  }
  return out;
}

inline CheckResult check_tradeoff(std::size_t trials, std::uint64_t seed) {
  CheckResult r{"trade-off shape (k=256, eps=0.5, target 0.25)"};
  const auto out = run_tradeoff(tradeoff_config(trials, seed));
  std::ostringstream os;
  for (const auto& p : out.curve.points) os << p.n << ":" << (p.open ? std::string("OPEN") : std::to_string(p.m_star)) << " ";
  if (out.summary) {
    os << "slope=" << fmt(out.summary->slope, 3) << " spread=" << fmt(out.summary->product_spread, 3);
    r.passed = out.summary->slope >= -1.4 && out.summary->slope <= -0.6 && out.summary->product_spread <= 16.0;
  } else {
    os << "fewer than 4 closed boundary points";
  }
  r.detail = os.str();
  return r;
}

// ---------------------------------------------------------------------------
// Likelihood-ratio oracle dominance

inline CheckResult check_np_dominance(std::size_t trials, std::uint64_t seed) {
  CheckResult r{"NP oracle dominance over baselines (3x3 grid)"};
  std::size_t ok = 0, total = 0;
  double worst = -1.0;
  for (double eps : {0.3, 0.5, 0.7})
    for (std::size_t m : {10, 40, 160}) {
      auto cfg = paninski_config(50, eps, trials, seed);
      const std::size_t n = 200;
      cfg.test = TestKind::NP;
      const auto np = estimate_error(cfg, n, m);
      for (auto t : {TestKind::L2, TestKind::Scheffe, TestKind::Huber, TestKind::Birge}) {
        cfg.test = t;
        const auto b = estimate_error(cfg, n, m);
        const double se = std::sqrt(np.ci95 * np.ci95 + b.ci95 * b.ci95) / 1.959963984540054;
        const double margin = np.err_total() - b.err_total();
        worst = std::max(worst, margin / se);
        ok += margin <= 3.0 * se;
        ++total;
      }
    }
  r.passed = ok == total;
  r.detail = std::to_string(ok) + "/" + std::to_string(total) + " comparisons, max (np - baseline)/SE = " + fmt(worst, 3);
  return r;
}

// ---------------------------------------------------------------------------
// Permutation p-values under the null

inline double ks_uniform(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  const double n = static_cast<double>(p.size());
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    // Right-continuous empirical CDF at ties: use the last index of the run.
    std::size_t j = i;
    while (j + 1 < p.size() && p[j + 1] == p[i]) ++j;
    d = std::max(d, std::fabs(static_cast<double>(j + 1) / n - p[i]));
    d = std::max(d, std::fabs(p[i] - static_cast<double>(i) / n));
    i = j;
  }
  return d;
}

inline CheckResult check_pvalue_uniformity(std::size_t trials, std::uint64_t seed) {
  CheckResult r{"permutation p-value uniformity under the null"};
  const auto pair = paninski_pair(50, 0.3, derive_seed(seed, "pair"));
  std::vector<double> ps(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const auto s = derive_seed(seed, {t});
    const auto x = sample(pair.first, 50, derive_seed(s, "X"), Source::X);
    const auto y = sample(pair.second, 50, derive_seed(s, "Y"), Source::Y);
    const auto z = sample(pair.first, 50, derive_seed(s, "Z"), Source::Z);
    ps[t] = permutation_pvalue(x, y, z, 99, derive_seed(s, "perm"), 100).p_value;
  }
  const double d = ks_uniform(ps);
  r.passed = d <= 0.05;
  r.detail = std::to_string(trials) + " p-values (P=99), KS distance = " + fmt(d, 3);
  return r;
}

// ---------------------------------------------------------------------------
// Gaussian closed forms and projection contraction

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

inline CheckResult check_gaussian_forms(std::size_t cases, std::uint64_t seed) {
  CheckResult r{"Gaussian closed forms and projection contraction"};
  Philox rng(seed);
  double kl_err = 0.0, chi_err = 0.0;
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t dim = 1 + rng.below(8);
    std::vector<double> a(dim), b(dim);
    for (auto& v : a) v = 0.5 * rng.normal();
    for (auto& v : b) v = 0.5 * rng.normal();
    const auto g = gaussian_divergences(a, b);
    const double delta = std::sqrt(l2_distance_sq(a, b));
    const double kl_q = integrate_1d([&](double x) { return normal_pdf(x) * (0.5 * (x - delta) * (x - delta) - 0.5 * x * x); },
                                     -40.0, 40.0, 400);
    const double chi_q = integrate_1d([&](double x) {
                           const double q = normal_pdf(x - delta);
                           return q * std::exp(0.5 * x * x - 0.5 * (x - delta) * (x - delta));
                         },
                                      -40.0, 40.0, 400) - 1.0;
    kl_err = std::max(kl_err, std::fabs(kl_q - g.kl) / std::max(1.0, g.kl));
    chi_err = std::max(chi_err, std::fabs(chi_q - g.chi2) / std::max(1.0, g.chi2));
  }
  double contraction = -1.0;
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t d = 1 + rng.below(2);
    auto random_bump = [&](std::size_t kappa) {
      const double peak = std::pow(bump_profile::sup_norm(), double(d)) * std::pow(double(kappa), 0.5 * double(d));
      SmoothBumpDensity::Params p{.d = d, .beta = 2.0, .kappa = kappa, .rho = 0.5 * rng.uniform() / peak};
      p.eta = random_signs(ipow(kappa, d), rng());
      return SmoothBumpDensity::make(p);
    };
    const auto f = random_bump(1 + rng.below(d == 1 ? 8 : 4));
    const auto g = random_bump(1 + rng.below(d == 1 ? 8 : 4));
    const std::size_t kappa = 1 + rng.below(d == 1 ? 12 : 6);
    const double h_proj = hellinger(project_grid(f, kappa), project_grid(g, kappa));
    const double h_full = std::sqrt(hellinger_sq_quadrature(f, g, 4));
    contraction = std::max(contraction, h_proj - h_full);
  }
  r.passed = kl_err <= 1e-6 && chi_err <= 1e-6 && contraction <= 1e-6;
  r.detail = "max rel err KL = " + fmt(kl_err, 3) + ", chi2 = " + fmt(chi_err, 3) +
             "; max H(Pf,Pg) - H(f,g) = " + fmt(contraction, 3);
  return r;
}

// ---------------------------------------------------------------------------
// Multinomial product bound

inline CheckResult check_multinomial_bound(std::size_t draws, std::uint64_t seed) {
  CheckResult r{"multinomial product bound"};
  std::size_t ok = 0, total = 0;
  double worst = 0.0;
  for (double a : {0.5, 1.0, 2.0})
    for (double b : {0.5, 1.0, 2.0})
      for (double c : {0.5, 1.0, 2.0})
        for (std::size_t n : {4, 16})
          for (std::size_t k : {4, 16}) {
            const auto res = multinomial_product_check(a, b, c, n, k, draws, derive_seed(seed, {total}));
            worst = std::max(worst, res.mean / res.bound);
            ok += res.holds;
            ++total;
          }
  r.passed = ok == total;
  r.detail = std::to_string(ok) + "/" + std::to_string(total) + " grid points, max MC mean / bound = " + fmt(worst, 4);
  return r;
}

// ---------------------------------------------------------------------------

template <class F>
CheckResult timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r = f();
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Oracle suite for the `verify` subcommand. `quick` shrinks the Monte
/// Carlo budgets.
inline std::vector<CheckResult> run_oracle_suite(bool quick, std::uint64_t seed) {
  std::vector<CheckResult> out;
  const std::size_t trials = quick ? 20000 : 200000;
  std::vector<MeanVarMc> runs;
  out.push_back(timed([&] {
    runs = mean_var_triples(20, trials, derive_seed(seed, "mean-var"));
    return check_mean_formula(runs);
  }));
  out.push_back(timed([&] { return check_variance_domination(runs); }));
  out.push_back(timed([] { return check_exhaustive_enumeration(); }));
  out.push_back(timed([&] { return check_divergence_chain(1000, derive_seed(seed, "chain")); }));
  out.push_back(timed([&] { return check_flattening(100, 64, derive_seed(seed, "flatten")); }));
  out.push_back(timed([&] { return check_gaussian_forms(quick ? 20 : 50, derive_seed(seed, "gauss")); }));
  out.push_back(timed([&] { return check_multinomial_bound(quick ? 20000 : 100000, derive_seed(seed, "multinomial")); }));
  return out;
}

}  // namespace lfht::verify
