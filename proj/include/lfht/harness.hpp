#pragma once

// Monte Carlo error estimation over (n, m) grids, boundary search and
// trade-off summaries. Every result is a pure function of the config and
// the grid coordinates; worker count only changes speed.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdio>
#include <exception>
#include <limits>
#include <span>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "lfht/adversarial.hpp"
#include "lfht/baseline.hpp"
#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/l2_engine.hpp"
#include "lfht/rng.hpp"

namespace lfht {

inline constexpr const char* kVersion = "0.1.0";

enum class TestKind : std::uint8_t { L2, L2Flattened, Scheffe, Huber, Birge, NP };

inline const char* to_string(TestKind t) {
  switch (t) {
    case TestKind::L2: return "l2";
    case TestKind::L2Flattened: return "l2-flat";
    case TestKind::Scheffe: return "scheffe";
    case TestKind::Huber: return "huber";
    case TestKind::Birge: return "birge";
    case TestKind::NP: return "np";
  }
  return "?";
}

inline std::optional<TestKind> parse_test_kind(const std::string& s) {
  for (auto t : {TestKind::L2, TestKind::L2Flattened, TestKind::Scheffe, TestKind::Huber, TestKind::Birge, TestKind::NP})
    if (s == to_string(t)) return t;
  return std::nullopt;
}

inline std::optional<ClassTag> parse_class_tag(const std::string& s) {
  for (auto c : {ClassTag::PD, ClassTag::PDb, ClassTag::PH, ClassTag::PG})
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct ExperimentConfig {
  ClassTag cls = ClassTag::PDb;
  std::size_t k = 100;  // alphabet size for discrete classes
  double beta = 1.0;
  std::size_t d = 1;
  double s = 1.0;
  double c_const = 1.0;  // Holder / Sobolev radius
  double eps = 0.3;
  std::string instance = "paninski";  // paninski | valiant | bump | floor | gaussian-prior
  double eta_v = 0.01;
  TestKind test = TestKind::L2;
  double smoothing = 0.5;
  double c_kappa = 1.0;
  double r_multiplier = 4.0;
  double c_norm = 4.0;
  bool with_diagonal = false;
  std::vector<std::size_t> n_grid{100};
  std::vector<std::size_t> m_grid{100};
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  double target = 0.25;
  bool redraw = false;  // fresh instance per trial instead of one fixed pair
  std::size_t threads = 1;
  // Explicit pair; overrides `instance` when both are set.
  std::optional<Distribution> px;
  std::optional<Distribution> py;

  void validate() const {
    auto sorted = [](const std::vector<std::size_t>& g) {
      return !g.empty() && std::is_sorted(g.begin(), g.end()) && g.front() >= 1;
    };
    if (!sorted(n_grid) || !sorted(m_grid)) throw FormatError("grids must be non-empty, ascending and >= 1");
    if (trials < 50) throw FormatError("trials must be >= 50");
    if (!(eps >= 0.0 && eps < 1.0)) throw FormatError("eps must be in [0,1)");
    if (!(target > 0.0 && target < 2.0)) throw FormatError("target must be in (0,2)");
    if (px.has_value() != py.has_value()) throw FormatError("px and py must be given together");
  }

  ClassConfig class_config() const {
    ClassConfig c;
    c.cls = cls;
    c.k = 0;
    c.beta = beta;
    c.d = d;
    c.s = s;
    c.c_sob = c_const;
    c.eps = eps;
    c.c_kappa = c_kappa;
    c.r_multiplier = r_multiplier;
    c.c_norm = c_norm;
    c.with_diagonal = with_diagonal;
    return c;
  }
};

struct InstancePair {
  Distribution px;
  Distribution py;
};

/// Builds the hypothesis pair named by the config. For the discrete classes
/// k is the alphabet size, so the paired-bin construction uses k/2 pairs.
inline InstancePair make_instance(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t n = 0,
                                  std::size_t m = 0) {
  if (cfg.px && cfg.py) return {*cfg.px, *cfg.py};
  if (cfg.instance == "paninski") {
    if (cfg.k < 2 || cfg.k % 2) throw ConstructionError("paired-bin instance needs an even alphabet size");
    if (cfg.eps == 0.0) return {DiscretePmf::uniform(cfg.k), DiscretePmf::uniform(cfg.k)};
    auto p = paninski_pair(cfg.k / 2, cfg.eps, seed);
    return {std::move(p.first), std::move(p.second)};
  }
  if (cfg.instance == "valiant") {
    auto p = valiant_pair(cfg.k, n, std::min(n, m), cfg.eps, cfg.eta_v);
    return {std::move(p.first), std::move(p.second)};
  }
  if (cfg.instance == "bump") {
    auto p = smooth_bump_pair(cfg.beta, cfg.d, cfg.c_const, cfg.eps, std::nullopt, seed);
    return {std::move(p.first), std::move(p.second)};
  }
  if (cfg.instance == "floor") {
    auto p = hellinger_floor_pair(cfg.beta, cfg.d, cfg.eps, std::nullopt, seed);
    return {std::move(p.first), std::move(p.second)};
  }
  if (cfg.instance == "gaussian-prior") {
    auto inst = gaussian_prior_instance(cfg.s, cfg.c_const, cfg.eps, seed);
    return {std::move(inst.px), std::move(inst.py)};
  }
  throw FormatError("unknown instance kind: " + cfg.instance);
}

/// Bins cube samples at the class resolution so estimate-based tests can
/// run on smooth densities.
inline SampleSet as_discrete(const SampleSet& s, const ExperimentConfig& cfg) {
  if (s.kind == SampleKind::Discrete) return s;
  if (s.kind == SampleKind::Cube) return bin_cube_sample(s, histogram_kappa(cfg.class_config()));
  throw PreconditionError("estimate-based tests need discrete or cube samples");
}

inline int run_test(const ExperimentConfig& cfg, const InstancePair& inst, const SampleSet& x, const SampleSet& y,
                    const SampleSet& z, std::uint64_t seed) {
  switch (cfg.test) {
    case TestKind::L2:
      return lfht_test(x, y, z, cfg.class_config()).decision;
    case TestKind::L2Flattened: {
      require(x.kind == SampleKind::Discrete, "flattened test needs discrete samples");
      const std::size_t k = std::get<DiscretePmf>(inst.px).size();
      return lfht_test_pd(x, y, z, k, cfg.eps, derive_seed(seed, "flatten-test"), cfg.c_norm).decision;
    }
    case TestKind::NP:
      return np_oracle_test(inst.px, inst.py, z).decision;
    case TestKind::Scheffe:
    case TestKind::Huber:
    case TestKind::Birge: {
      const auto dx = as_discrete(x, cfg), dy = as_discrete(y, cfg), dz = as_discrete(z, cfg);
      const std::size_t k = std::max({dx.dim, dy.dim, dz.dim});
      const auto est = estimate_pair(dx, dy, k, cfg.smoothing);
      if (cfg.test == TestKind::Scheffe) return scheffe_test(est, dz).decision;
      if (cfg.test == TestKind::Huber) return huber_test(est, dz, cfg.eps).decision;
      try {
        return birge_test(est, dz).decision;
      } catch (const DegenerateEstimates&) {
        Philox coin(derive_seed(seed, "degenerate-coin"));
        return static_cast<int>(coin() >> 63);
      }
    }
  }
  throw PreconditionError("unknown test");
}

/// Wilson score interval half-width at 95%.
inline double wilson_half_width(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) return 1.0;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  return z / (1.0 + z * z / n) * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
}

/// Wilson interval [lo, hi].
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                                 double z = 1.959963984540054) {
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double center = (p + z * z / (2.0 * n)) / (1.0 + z * z / n);
  const double hw = wilson_half_width(successes, trials, z);
  return {center - hw, center + hw};
}

struct PhasePoint {
  std::size_t n = 0;
  std::size_t m = 0;
  double err1 = 0.0;
  double err2 = 0.0;
  std::size_t trials = 0;
  double ci95 = 0.0;  // pooled Wilson half-width of err1 + err2
  std::string flag = "ok";

  double err_total() const noexcept { return err1 + err2; }
  friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

/// Runs body(i) for i in [0, count) on `threads` workers. Each index is
/// processed exactly once; callers write into pre-sized slots.
inline void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& body) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= count || failed.load()) return;
          try {
            body(i);
          } catch (...) {
            if (!failed.exchange(true)) error = std::current_exception();
            return;
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

/// Per-trial seed: a pure function of (base seed, n, m, trial, hypothesis).
inline std::uint64_t trial_seed(std::uint64_t base, std::size_t n, std::size_t m, std::size_t trial, int hyp) {
  return derive_seed(base, {n, m, trial, static_cast<std::uint64_t>(hyp)});
}

inline PhasePoint estimate_error(const ExperimentConfig& cfg, std::size_t n, std::size_t m) {
  require(n >= 1 && m >= 1, "sample sizes must be >= 1");
  std::optional<InstancePair> fixed;
  if (!cfg.redraw) fixed = make_instance(cfg, derive_seed(cfg.seed, "instance"), n, m);
  std::vector<unsigned char> wrong(2 * cfg.trials, 0);
  parallel_for(2 * cfg.trials, cfg.threads, [&](std::size_t job) {
    const std::size_t trial = job / 2;
    const int hyp = static_cast<int>(job % 2);
    const std::uint64_t ts = trial_seed(cfg.seed, n, m, trial, hyp);
    const InstancePair inst = fixed ? *fixed : make_instance(cfg, derive_seed(ts, "instance"), n, m);
    const auto x = sample(inst.px, n, derive_seed(ts, "X"), Source::X);
    const auto y = sample(inst.py, n, derive_seed(ts, "Y"), Source::Y);
    const auto z = sample(hyp == 0 ? inst.px : inst.py, m, derive_seed(ts, "Z"), Source::Z);
    const int decision = run_test(cfg, inst, x, y, z, derive_seed(ts, "test"));
    wrong[job] = decision != hyp;
  });
  std::size_t e1 = 0, e2 = 0;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    e1 += wrong[2 * t];
    e2 += wrong[2 * t + 1];
  }
  PhasePoint p;
  p.n = n;
  p.m = m;
  p.trials = cfg.trials;
  p.err1 = static_cast<double>(e1) / static_cast<double>(cfg.trials);
  p.err2 = static_cast<double>(e2) / static_cast<double>(cfg.trials);
  const double h1 = wilson_half_width(e1, cfg.trials), h2 = wilson_half_width(e2, cfg.trials);
  p.ci95 = std::sqrt(h1 * h1 + h2 * h2);
  return p;
}

/// Full n x m grid in grid order (n outer, m inner).
inline std::vector<PhasePoint> sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<PhasePoint> out;
  out.reserve(cfg.n_grid.size() * cfg.m_grid.size());
  for (auto n : cfg.n_grid)
    for (auto m : cfg.m_grid) out.push_back(estimate_error(cfg, n, m));
  return out;
}

/// Powers of two from lo to hi inclusive (lo and hi rounded to powers).
inline std::vector<std::size_t> log2_grid(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> g;
  for (std::size_t v = std::bit_floor(std::max<std::size_t>(1, lo)); v <= hi; v *= 2) g.push_back(v);
  return g;
}

struct BoundaryPoint {
  std::size_t n = 0;
  std::size_t m_star = 0;      // after the isotonic pass
  std::size_t m_star_raw = 0;  // as searched
  PhasePoint at;               // estimate at the raw m*
  bool open = false;           // target not reached within the bracket
  std::size_t probes = 0;
};

struct BoundaryCurve {
  std::vector<BoundaryPoint> points;
  double target = 0.25;
  std::size_t raw_violations = 0;
  std::size_t m_lo = 0, m_hi = 0;
};

/// Non-increasing least-squares fit (pool adjacent violators).
inline std::vector<double> isotonic_non_increasing(std::span<const double> y) {
  struct Block {
    double sum;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      auto& b = blocks[blocks.size() - 1];
      auto& a = blocks[blocks.size() - 2];
      if (a.sum / a.count >= b.sum / b.count) break;
      a.sum += b.sum;
      a.count += b.count;
      blocks.pop_back();
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.count);
  return out;
}

/// For each n, the smallest m in [m_grid.front(), m_grid.back()] with
/// err1 + err2 <= target, by geometric bisection with at most 8
/// error estimates per n.
inline BoundaryCurve find_boundary(const ExperimentConfig& cfg, double target) {
  cfg.validate();
  BoundaryCurve curve;
  curve.target = target;
  curve.m_lo = cfg.m_grid.front();
  curve.m_hi = cfg.m_grid.back();
  for (auto n : cfg.n_grid) {
    BoundaryPoint bp;
    bp.n = n;
    auto probe = [&](std::size_t m) {
      ++bp.probes;
      return estimate_error(cfg, n, m);
    };
    PhasePoint hi_pt = probe(curve.m_hi);
    if (hi_pt.err_total() > target) {
      bp.open = true;
      bp.m_star_raw = curve.m_hi;
      bp.at = hi_pt;
      bp.at.flag = "OPEN";
      curve.points.push_back(bp);
      continue;
    }
    std::size_t hi = curve.m_hi;
    std::size_t lo = curve.m_lo;
    PhasePoint lo_pt = lo == hi ? hi_pt : probe(lo);
    if (lo_pt.err_total() <= target) {
      hi = lo;
      hi_pt = lo_pt;
    } else {
      while (hi > lo + 1 && bp.probes < 8) {
        auto mid = static_cast<std::size_t>(std::llround(std::sqrt(double(lo) * double(hi))));
        mid = std::clamp(mid, lo + 1, hi - 1);
        const auto pt = probe(mid);
        if (pt.err_total() <= target) {
          hi = mid;
          hi_pt = pt;
        } else {
          lo = mid;
        }
      }
    }
    bp.m_star_raw = hi;
    bp.at = hi_pt;
    curve.points.push_back(bp);
  }
  // Isotonic pass over closed points on log m.
  std::vector<double> logs;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < curve.points.size(); ++i)
    if (!curve.points[i].open) {
      logs.push_back(std::log(static_cast<double>(curve.points[i].m_star_raw)));
      idx.push_back(i);
    }
  for (std::size_t j = 1; j < logs.size(); ++j) curve.raw_violations += logs[j] > logs[j - 1];
  const auto fit = isotonic_non_increasing(logs);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    auto& p = curve.points[idx[j]];
    p.m_star = static_cast<std::size_t>(std::llround(std::exp(fit[j])));
    if (p.m_star != p.m_star_raw) p.at.flag = "ISO";
  }
  for (auto& p : curve.points)
    if (p.open) p.m_star = p.m_star_raw;
  return curve;
}

struct TradeoffSummary {
  double slope = 0.0;          // least squares of log m* on log n
  double product_spread = 1.0; // max n m* / min n m*
  std::size_t points = 0;
};

inline TradeoffSummary tradeoff_report(std::span<const std::pair<double, double>> nm) {
  if (nm.size() < 4) throw PreconditionError("trade-off report needs at least 4 boundary points");
  TradeoffSummary t;
  t.points = nm.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double pmin = std::numeric_limits<double>::infinity(), pmax = 0.0;
  for (auto [n, m] : nm) {
    const double x = std::log(n), y = std::log(m);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    pmin = std::min(pmin, n * m);
    pmax = std::max(pmax, n * m);
  }
  const double k = static_cast<double>(nm.size());
  const double denom = k * sxx - sx * sx;
  if (!(denom > 0.0)) throw PreconditionError("trade-off report needs distinct n values");
  t.slope = (k * sxy - sx * sy) / denom;
  t.product_spread = pmax / pmin;
  return t;
}

inline TradeoffSummary tradeoff_report(const BoundaryCurve& curve) {
  std::vector<std::pair<double, double>> nm;
  for (const auto& p : curve.points)
    if (!p.open) nm.emplace_back(static_cast<double>(p.n), static_cast<double>(p.m_star));
  return tradeoff_report(nm);
}

// ---------------------------------------------------------------------------
// CSV output

inline constexpr const char* kCsvHeader = "class,k,beta,d,s,eps,test,n,m,trials,err1,err2,err_total,ci95,flag";

inline std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_csv_row(std::ostream& os, const ExperimentConfig& cfg, const PhasePoint& p) {
  os << to_string(cfg.cls) << ',' << cfg.k << ',' << csv_number(cfg.beta) << ',' << cfg.d << ','
     << csv_number(cfg.s) << ',' << csv_number(cfg.eps) << ',' << to_string(cfg.test) << ',' << p.n << ',' << p.m
     << ',' << p.trials << ',' << csv_number(p.err1) << ',' << csv_number(p.err2) << ','
     << csv_number(p.err_total()) << ',' << csv_number(p.ci95) << ',' << p.flag << '\n';
}

inline void write_csv_footer(std::ostream& os, std::uint64_t seed, const std::string& config_hash) {
  os << "# lfht-lab " << kVersion << " seed=" << seed << " config-hash=" << config_hash << '\n';
}

inline void write_sweep_csv(std::ostream& os, const ExperimentConfig& cfg, std::span<const PhasePoint> pts,
                            const std::string& config_hash) {
  os << kCsvHeader << '\n';
  for (const auto& p : pts) write_csv_row(os, cfg, p);
  write_csv_footer(os, cfg.seed, config_hash);
}

/// One row per n at m = m* (after the isotonic pass).
inline void write_boundary_csv(std::ostream& os, const ExperimentConfig& cfg, const BoundaryCurve& curve,
                               const std::string& config_hash) {
  os << kCsvHeader << '\n';
  for (const auto& b : curve.points) {
    PhasePoint p = b.at;
    p.m = b.m_star;
    write_csv_row(os, cfg, p);
  }
  write_csv_footer(os, cfg.seed, config_hash);
}

}  // namespace lfht
