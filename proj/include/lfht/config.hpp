#pragma once

// Experiment configuration as JSON: parsing with strict key checking,
// dotted-key overrides, and the canonical form used for provenance hashes.

#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfht/errors.hpp"
#include "lfht/harness.hpp"
#include "lfht/io.hpp"
#include "lfht/rng.hpp"

namespace lfht::config {

using json = nlohmann::json;

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) throw FormatError("unknown config key '" + where + key + "'");
}

inline std::vector<std::size_t> grid_from_json(const json& g, const char* name) {
  if (g.is_array()) {
    std::vector<std::size_t> out;
    for (const auto& v : g) {
      if (!v.is_number_unsigned()) throw FormatError(std::string("grid.") + name + " must hold positive integers");
      out.push_back(v.get<std::size_t>());
    }
    return out;
  }
  if (g.is_object()) {
    check_keys(g, {"from", "to"}, std::string("grid.") + name + ".");
    return log2_grid(io::field<std::size_t>(g, "from"), io::field<std::size_t>(g, "to"));
  }
  if (g.is_number_unsigned()) return {g.get<std::size_t>()};
  throw FormatError(std::string("grid.") + name + " must be a list or {from, to}");
}

}  // namespace detail

/// Sets `dotted.key` to `value` (parsed as JSON when possible, otherwise
/// kept as a string), creating intermediate objects.
inline void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw FormatError("override must look like key=value: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw FormatError("empty path segment in override: " + key);
    if (!node->is_object()) throw FormatError("override path crosses a non-object: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

inline ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw FormatError("config must be a JSON object");
  detail::check_keys(j, {"class", "k", "beta", "d", "s", "C", "eps", "instance", "eta_v", "test", "grid", "trials",
                         "seed", "target", "redraw", "px", "py"},
                     "");
  ExperimentConfig c;
  if (j.contains("class")) {
    const auto name = io::field<std::string>(j, "class");
    const auto tag = parse_class_tag(name);
    if (!tag) throw FormatError("unknown class: " + name);
    c.cls = *tag;
  }
  c.k = io::field_or<std::size_t>(j, "k", c.k);
  c.beta = io::field_or<double>(j, "beta", c.beta);
  c.d = io::field_or<std::size_t>(j, "d", c.d);
  c.s = io::field_or<double>(j, "s", c.s);
  c.c_const = io::field_or<double>(j, "C", c.c_const);
  c.eps = io::field_or<double>(j, "eps", c.eps);
  c.instance = io::field_or<std::string>(j, "instance", c.instance);
  c.eta_v = io::field_or<double>(j, "eta_v", c.eta_v);
  if (j.contains("test")) {
    const auto& t = j.at("test");
    json tj = t.is_string() ? json{{"name", t}} : t;
    if (!tj.is_object()) throw FormatError("test must be a name or an object");
    detail::check_keys(tj, {"name", "smoothing", "c_kappa", "r_multiplier", "c_norm", "with_diagonal"}, "test.");
    if (tj.contains("name")) {
      const auto name = io::field<std::string>(tj, "name");
      const auto kind = parse_test_kind(name);
      if (!kind) throw FormatError("unknown test: " + name);
      c.test = *kind;
    }
    c.smoothing = io::field_or<double>(tj, "smoothing", c.smoothing);
    c.c_kappa = io::field_or<double>(tj, "c_kappa", c.c_kappa);
    c.r_multiplier = io::field_or<double>(tj, "r_multiplier", c.r_multiplier);
    c.c_norm = io::field_or<double>(tj, "c_norm", c.c_norm);
    c.with_diagonal = io::field_or<bool>(tj, "with_diagonal", c.with_diagonal);
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (!g.is_object()) throw FormatError("grid must be an object");
    detail::check_keys(g, {"n", "m"}, "grid.");
    if (g.contains("n")) c.n_grid = detail::grid_from_json(g.at("n"), "n");
    if (g.contains("m")) c.m_grid = detail::grid_from_json(g.at("m"), "m");
  }
  c.trials = io::field_or<std::size_t>(j, "trials", c.trials);
  c.seed = io::field_or<std::uint64_t>(j, "seed", c.seed);
  c.target = io::field_or<double>(j, "target", c.target);
  c.redraw = io::field_or<bool>(j, "redraw", c.redraw);
  try {
    if (j.contains("px")) c.px = io::distribution_from_json(j.at("px"));
    if (j.contains("py")) c.py = io::distribution_from_json(j.at("py"));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("invalid distribution in config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Fully populated config; the input to the provenance hash.
inline json to_json(const ExperimentConfig& c) {
  json j = {{"class", to_string(c.cls)},
            {"k", c.k},
            {"beta", c.beta},
            {"d", c.d},
            {"s", c.s},
            {"C", c.c_const},
            {"eps", c.eps},
            {"instance", c.instance},
            {"eta_v", c.eta_v},
            {"test",
             {{"name", to_string(c.test)},
              {"smoothing", c.smoothing},
              {"c_kappa", c.c_kappa},
              {"r_multiplier", c.r_multiplier},
              {"c_norm", c.c_norm},
              {"with_diagonal", c.with_diagonal}}},
            {"grid", {{"n", c.n_grid}, {"m", c.m_grid}}},
            {"trials", c.trials},
            {"seed", c.seed},
            {"target", c.target},
            {"redraw", c.redraw}};
  if (c.px) j["px"] = io::to_json(*c.px);
  if (c.py) j["py"] = io::to_json(*c.py);
  return j;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_tag(to_json(c).dump())));
  return buf;
}

inline ExperimentConfig load(const std::string& path, const std::vector<std::string>& overrides) {
  const auto text = io::read_file(path);
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw FormatError("config is not valid JSON: " + path);
  for (const auto& o : overrides) apply_override(j, o);
  return from_json(j);
}

}  // namespace lfht::config
