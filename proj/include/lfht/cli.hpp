#pragma once

// The `lfht` command line: gen, test, sweep, boundary, pvalue, verify.
// Exit codes: 0 success, 1 usage or config error, 2 runtime error.

#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfht/adversarial.hpp"
#include "lfht/baseline.hpp"
#include "lfht/config.hpp"
#include "lfht/errors.hpp"
#include "lfht/harness.hpp"
#include "lfht/io.hpp"
#include "lfht/l2_engine.hpp"
#include "lfht/verify.hpp"

namespace lfht::cli {

using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

namespace detail {

struct Options {
  // shared
  std::string config_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string output;
  // gen
  std::size_t n = 100, m = 100;
  std::string truth = "null";
  std::string out_dir = ".";
  bool fingerprint = false;
  // test / pvalue
  std::string cls = "P_Db";
  std::string test = "l2";
  std::size_t k = 0, d = 1;
  double beta = 1.0, s = 1.0, c_const = 1.0, eps = 0.1, smoothing = 0.5, c_kappa = 1.0, c_norm = 4.0;
  bool with_diagonal = false;
  std::string x_path, y_path, z_path, px_path, py_path;
  std::size_t permutations = 99;
  std::size_t kappa = 0;
  std::string ties = "randomized";
  // boundary
  double target = -1.0;
  // verify
  bool quick = false;
};

inline void emit(const Options& o, std::ostream& out, const std::string& text) {
  if (o.output.empty()) {
    out << text;
    return;
  }
  io::write_file(o.output, text);
}

inline ExperimentConfig load_config(const Options& o, CLI::App* sub, bool required) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) {
    cfg = config::load(o.config_path, o.overrides);
  } else {
    if (required) throw FormatError("--config is required");
    json j = json::object();
    for (const auto& ov : o.overrides) config::apply_override(j, ov);
    cfg = config::from_json(j);
  }
  if (sub->count("--seed")) cfg.seed = o.seed;
  cfg.threads = o.threads;
  return cfg;
}

inline void echo_config(const ExperimentConfig& cfg, std::ostream& err) {
  err << "# effective config " << config::to_json(cfg).dump() << '\n';
}

inline int cmd_gen(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(o, sub, false);
  echo_config(cfg, err);
  const auto inst_pair = make_instance(cfg, derive_seed(cfg.seed, "instance"), o.n, o.m);
  LfhtInstance inst;
  inst.class_tag = cfg.cls;
  inst.px = inst_pair.px;
  inst.py = inst_pair.py;
  if (o.truth != "null" && o.truth != "alt") throw FormatError("--truth must be null or alt");
  inst.truth = o.truth == "null" ? Truth::Null : Truth::Alt;
  inst.eps = measured_separation(inst);
  inst.metadata = {{"eps_target", cfg.eps}, {"n", double(o.n)}, {"m", double(o.m)}, {"seed", double(cfg.seed)}};
  const auto x = sample(inst.px, o.n, derive_seed(cfg.seed, "X"), Source::X);
  const auto y = sample(inst.py, o.n, derive_seed(cfg.seed, "Y"), Source::Y);
  const auto z = sample(inst.pz(), o.m, derive_seed(cfg.seed, "Z"), Source::Z);
  const std::string dir = o.out_dir.empty() ? "." : o.out_dir;
  io::write_file(dir + "/instance.json", io::to_json(inst).dump(2) + "\n");
  io::write_file(dir + "/X.bin", io::encode_binary(x));
  io::write_file(dir + "/Y.bin", io::encode_binary(y));
  io::write_file(dir + "/Z.bin", io::encode_binary(z));
  if (o.fingerprint) {
    if (x.kind != SampleKind::Discrete) throw PreconditionError("fingerprints need a discrete instance");
    const SampleSet all[3] = {x, y, z};
    io::write_file(dir + "/fingerprint.csv", io::fingerprint_csv(fingerprint(all, x.dim)));
  }
  out << json{{"instance", dir + "/instance.json"}, {"separation", inst.eps}, {"n", o.n}, {"m", o.m}}.dump() << '\n';
  return kOk;
}

inline ClassConfig class_config_from(const Options& o) {
  ClassConfig c;
  const auto tag = parse_class_tag(o.cls);
  if (!tag) throw FormatError("unknown class: " + o.cls);
  c.cls = *tag;
  c.k = o.k;
  c.beta = o.beta;
  c.d = o.d;
  c.s = o.s;
  c.c_sob = o.c_const;
  c.eps = o.eps;
  c.c_kappa = o.c_kappa;
  c.c_norm = o.c_norm;
  c.with_diagonal = o.with_diagonal;
  return c;
}

inline int cmd_test(const Options& o, std::ostream& out) {
  const auto cc = class_config_from(o);
  const auto kind = parse_test_kind(o.test);
  if (!kind) throw FormatError("unknown test: " + o.test);
  const auto x = io::load_sample(o.x_path, o.k, Source::X);
  const auto y = io::load_sample(o.y_path, o.k, Source::Y);
  const auto z = io::load_sample(o.z_path, o.k, Source::Z);
  json result;
  switch (*kind) {
    case TestKind::L2:
      result = io::to_json(lfht_test(x, y, z, cc));
      break;
    case TestKind::L2Flattened: {
      const std::size_t k = o.k ? o.k : std::max({x.dim, y.dim, z.dim});
      result = io::to_json(lfht_test_pd(x, y, z, k, o.eps, o.seed, o.c_norm));
      break;
    }
    case TestKind::NP: {
      if (o.px_path.empty() || o.py_path.empty()) throw FormatError("--test np needs --px and --py");
      const auto px = io::distribution_from_json(json::parse(io::read_file(o.px_path)));
      const auto py = io::distribution_from_json(json::parse(io::read_file(o.py_path)));
      const auto r = np_oracle_test(px, py, z);
      result = {{"decision", r.decision}, {"statistic", r.statistic}};
      break;
    }
    default: {
      ExperimentConfig tmp;
      tmp.cls = cc.cls;
      tmp.eps = o.eps;
      tmp.beta = o.beta;
      tmp.c_kappa = o.c_kappa;
      const auto dx = as_discrete(x, tmp), dy = as_discrete(y, tmp), dz = as_discrete(z, tmp);
      const std::size_t k = std::max({o.k, dx.dim, dy.dim, dz.dim});
      const auto est = estimate_pair(dx, dy, k, o.smoothing);
      BaselineResult r = *kind == TestKind::Scheffe ? scheffe_test(est, dz)
                         : *kind == TestKind::Huber ? huber_test(est, dz, o.eps)
                                                    : birge_test(est, dz);
      result = {{"decision", r.decision}, {"statistic", r.statistic}, {"threshold", r.threshold}};
      if (!r.warnings.empty()) result["warnings"] = r.warnings;
    }
  }
  result["test"] = o.test;
  emit(o, out, result.dump(2) + "\n");
  return kOk;
}

inline int cmd_sweep(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  const auto cfg = load_config(o, sub, true);
  echo_config(cfg, err);
  const auto pts = sweep(cfg);
  std::ostringstream os;
  write_sweep_csv(os, cfg, pts, config::config_hash(cfg));
  emit(o, out, os.str());
  return kOk;
}

inline int cmd_boundary(const Options& o, CLI::App* sub, std::ostream& out, std::ostream& err) {
  auto cfg = load_config(o, sub, true);
  if (o.target > 0.0) cfg.target = o.target;
  cfg.validate();
  echo_config(cfg, err);
  const auto curve = find_boundary(cfg, cfg.target);
  std::ostringstream os;
  write_boundary_csv(os, cfg, curve, config::config_hash(cfg));
  emit(o, out, os.str());
  err << "# raw monotonicity violations: " << curve.raw_violations << '\n';
  try {
    const auto t = tradeoff_report(curve);
    err << "# slope " << t.slope << " product-spread " << t.product_spread << " points " << t.points << '\n';
  } catch (const PreconditionError& e) {
    err << "# trade-off summary unavailable: " << e.what() << '\n';
  }
  return kOk;
}

inline int cmd_pvalue(const Options& o, std::ostream& out) {
  auto x = io::load_sample(o.x_path, o.k, Source::X);
  auto y = io::load_sample(o.y_path, o.k, Source::Y);
  auto z = io::load_sample(o.z_path, o.k, Source::Z);
  if (x.kind == SampleKind::Cube) {
    if (o.kappa == 0) throw FormatError("cube samples need --kappa for binning");
    x = bin_cube_sample(x, o.kappa);
    y = bin_cube_sample(y, o.kappa);
    z = bin_cube_sample(z, o.kappa);
  }
  const std::size_t k = std::max({o.k, x.dim, y.dim, z.dim});
  if (o.ties != "randomized" && o.ties != "conservative") throw FormatError("--ties must be randomized or conservative");
  const auto rule = o.ties == "randomized" ? TieRule::Randomized : TieRule::Conservative;
  const auto r = permutation_pvalue(x, y, z, o.permutations, o.seed, k, rule);
  emit(o, out, json{{"p_value", r.p_value}, {"t_obs", r.t_obs}, {"P", r.permutations}}.dump(2) + "\n");
  return kOk;
}

inline int cmd_verify(const Options& o, std::ostream& out) {
  const auto results = verify::run_oracle_suite(o.quick, o.seed);
  std::ostringstream os;
  bool all = true;
  for (const auto& r : results) {
    os << (r.passed ? "PASS" : "FAIL") << "  " << std::left << std::setw(52) << r.name << " " << std::fixed
       << std::setprecision(2) << r.seconds << "s  " << r.detail << '\n';
    all = all && r.passed;
  }
  os << (all ? "all oracle checks passed" : "some oracle checks FAILED") << '\n';
  emit(o, out, os.str());
  return all ? kOk : kRuntimeError;
}

}  // namespace detail

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  detail::Options o;
  CLI::App app{"Simulation-based two-hypothesis testing lab (LFHT)", "lfht"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto add_config = [&](CLI::App* s) {
    s->add_option("-c,--config", o.config_path, "Experiment config (JSON)");
    s->add_option("--set", o.overrides, "Override a config value: dotted.key=value (repeatable)");
    s->add_option("--seed", o.seed, "Base seed (overrides the config)");
  };

  auto* gen = app.add_subcommand("gen", "Generate an instance and X/Y/Z sample files");
  add_config(gen);
  gen->add_option("--n", o.n, "Simulation sample size n")->check(CLI::PositiveNumber);
  gen->add_option("--m", o.m, "Real-data sample size m")->check(CLI::PositiveNumber);
  gen->add_option("--truth", o.truth, "Which hypothesis generates Z: null|alt");
  gen->add_option("-o,--out-dir", o.out_dir, "Directory for instance.json and sample files");
  gen->add_flag("--fingerprint", o.fingerprint, "Also write fingerprint.csv (discrete instances)");

  auto* test = app.add_subcommand("test", "Run one test on sample files and print a JSON report");
  test->add_option("--class", o.cls, "Class: P_D|P_Db|P_H|P_G");
  test->add_option("--test", o.test, "Test: l2|l2-flat|scheffe|huber|birge|np");
  test->add_option("--k", o.k, "Alphabet size (discrete)");
  test->add_option("--beta", o.beta, "Smoothness (P_H)");
  test->add_option("--d", o.d, "Dimension (P_H)");
  test->add_option("--s", o.s, "Sobolev smoothness (P_G)");
  test->add_option("--C", o.c_const, "Sobolev radius (P_G)");
  test->add_option("--eps", o.eps, "Separation");
  test->add_option("--c-kappa", o.c_kappa, "Histogram resolution constant (P_H)");
  test->add_option("--c-norm", o.c_norm, "Norm-screen constant (l2-flat)");
  test->add_option("--smoothing", o.smoothing, "Pseudo-count for density estimates");
  test->add_option("--x", o.x_path, "Sample file for X")->required();
  test->add_option("--y", o.y_path, "Sample file for Y")->required();
  test->add_option("--z", o.z_path, "Sample file for Z")->required();
  test->add_option("--px", o.px_path, "Distribution JSON of P_X (np test)");
  test->add_option("--py", o.py_path, "Distribution JSON of P_Y (np test)");
  test->add_option("--seed", o.seed, "Seed for randomized tests");
  test->add_flag("--with-diagonal", o.with_diagonal, "Threshold t_lf instead of t_lf_nodiag");
  test->add_option("-o,--output", o.output, "Write the report here instead of stdout");

  auto* sw = app.add_subcommand("sweep", "Estimate errors on the full n x m grid (CSV)");
  add_config(sw);
  sw->add_option("--threads", o.threads, "Worker threads (speed only)")->check(CLI::PositiveNumber);
  sw->add_option("-o,--output", o.output, "CSV output path (stdout if omitted)");

  auto* bd = app.add_subcommand("boundary", "Search m*(n) at a target total error (CSV)");
  add_config(bd);
  bd->add_option("--target", o.target, "Total-error target (overrides the config)");
  bd->add_option("--threads", o.threads, "Worker threads (speed only)")->check(CLI::PositiveNumber);
  bd->add_option("-o,--output", o.output, "CSV output path (stdout if omitted)");

  auto* pv = app.add_subcommand("pvalue", "Permutation p-value of the L2 statistic (JSON)");
  pv->add_option("--x", o.x_path, "Sample file for X")->required();
  pv->add_option("--y", o.y_path, "Sample file for Y")->required();
  pv->add_option("--z", o.z_path, "Sample file for Z")->required();
  pv->add_option("--k", o.k, "Alphabet size (discrete)");
  pv->add_option("--kappa", o.kappa, "Cells per axis for cube samples");
  pv->add_option("-P,--permutations", o.permutations, "Number of permutations (>= 19)");
  pv->add_option("--ties", o.ties, "Tie handling: randomized|conservative");
  pv->add_option("--seed", o.seed, "Permutation seed");
  pv->add_option("-o,--output", o.output, "Write the JSON here instead of stdout");

  auto* vf = app.add_subcommand("verify", "Run the oracle checks and print a pass/fail table");
  vf->add_flag("--quick", o.quick, "Smaller Monte Carlo budgets");
  vf->add_option("--seed", o.seed, "Seed for the checks");
  vf->add_option("-o,--output", o.output, "Write the table here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    err << app.help();
    return kConfigError;
  }

  try {
    if (*gen) return detail::cmd_gen(o, gen, out, err);
    if (*test) return detail::cmd_test(o, out);
    if (*sw) return detail::cmd_sweep(o, sw, out, err);
    if (*bd) return detail::cmd_boundary(o, bd, out, err);
    if (*pv) return detail::cmd_pvalue(o, out);
    if (*vf) return detail::cmd_verify(o, out);
  } catch (const FormatError& e) {
    err << "lfht: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const json::exception& e) {
    err << "lfht: config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "lfht: error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace lfht::cli
