#pragma once

// JSON documents for distributions and reports, the LFHTSAMP binary
// sample format, newline-delimited label files and fingerprint CSV.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfht/adversarial.hpp"
#include "lfht/bump.hpp"
#include "lfht/dist.hpp"
#include "lfht/errors.hpp"
#include "lfht/l2_engine.hpp"

namespace lfht::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Distributions

inline json to_json(const DiscretePmf& p) {
  return {{"kind", "discrete"}, {"weights", std::vector<double>(p.weights().begin(), p.weights().end())}};
}

inline json to_json(const SmoothBumpDensity& f) {
  std::vector<int> eta(f.eta().begin(), f.eta().end());
  json j = {{"kind", "bump"},   {"d", f.d()},     {"beta", f.beta()}, {"kappa", f.kappa()},
            {"rho", f.rho()},   {"eta", eta},     {"profile", f.profile()},
            {"base", f.base() == BaseKind::Uniform ? "uniform" : "eps2_floor"}};
  if (f.base() == BaseKind::Eps2Floor) j["base_eps"] = f.base_eps();
  return j;
}

inline json to_json(const GaussianSequenceSpec& g) {
  return {{"kind", "gaussian"}, {"theta", g.theta}, {"gamma", g.gamma}, {"s", g.s}, {"C", g.c_sob}};
}

inline json to_json(const Distribution& d) {
  return std::visit([](const auto& v) { return to_json(v); }, d);
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad field '") + key + "': " + e.what());
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

inline Distribution distribution_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("distribution must be a JSON object");
  const auto kind = field<std::string>(j, "kind");
  if (kind == "discrete") return make_discrete_pmf(field<std::vector<double>>(j, "weights"));
  if (kind == "bump") {
    SmoothBumpDensity::Params p;
    p.d = field<std::size_t>(j, "d");
    p.beta = field<double>(j, "beta");
    p.kappa = field<std::size_t>(j, "kappa");
    p.rho = field_or<double>(j, "rho", 0.0);
    for (int e : field_or<std::vector<int>>(j, "eta", {})) p.eta.push_back(static_cast<std::int8_t>(e));
    const auto base = field_or<std::string>(j, "base", "uniform");
    if (base == "eps2_floor") {
      p.base = BaseKind::Eps2Floor;
      p.base_eps = field<double>(j, "base_eps");
    } else if (base != "uniform") {
      throw FormatError("unknown bump base: " + base);
    }
    const auto profile = field_or<std::string>(j, "profile", bump_profile::kName);
    if (profile != bump_profile::kName) throw FormatError("unknown bump profile: " + profile);
    return SmoothBumpDensity::make(std::move(p));
  }
  if (kind == "gaussian") {
    GaussianSequenceSpec g;
    g.theta = field<std::vector<double>>(j, "theta");
    g.gamma = field_or<std::vector<double>>(j, "gamma", {});
    g.s = field_or<double>(j, "s", 1.0);
    g.c_sob = field_or<double>(j, "C", 1.0);
    return g;
  }
  throw FormatError("unknown distribution kind: " + kind);
}

inline json to_json(const LfhtInstance& inst) {
  json meta = json::object();
  for (const auto& [k, v] : inst.metadata) meta[k] = v;
  return {{"class", to_string(inst.class_tag)},
          {"eps", inst.eps},
          {"truth", inst.truth == Truth::Null ? "null" : "alt"},
          {"px", to_json(inst.px)},
          {"py", to_json(inst.py)},
          {"metadata", meta}};
}

inline json to_json(const StatReport& r) {
  json j = {{"t_lf", r.t_lf},
            {"t_lf_nodiag", r.t_lf_nodiag},
            {"diagonal", r.diagonal},
            {"decision", r.decision},
            {"statistic", r.with_diagonal ? "t_lf" : "t_lf_nodiag"},
            {"basis", {{"kind", to_string(r.basis.kind)}, {"dim", r.basis.dim()}}}};
  if (r.alphabet) {
    j["flattened_alphabet"] = r.alphabet;
    j["aborted"] = r.aborted;
    j["early_exit"] = r.early_exit;
    j["norm_x"] = r.norm_x;
    j["norm_y"] = r.norm_y;
  }
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

// ---------------------------------------------------------------------------
// Samples

inline constexpr char kMagic[8] = {'L', 'F', 'H', 'T', 'S', 'A', 'M', 'P'};

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("truncated sample file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

}  // namespace detail

/// Header: magic, u8 kind, u8 source, u16 reserved, u32 dim, u64 count;
/// then u32 indices (discrete) or count*dim f64 values, little-endian.
inline std::string encode_binary(const SampleSet& s) {
  std::string out(kMagic, kMagic + 8);
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(s.kind));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(s.source));
  detail::put_le<std::uint16_t>(out, 0);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.dim));
  detail::put_le<std::uint64_t>(out, s.count());
  if (s.kind == SampleKind::Discrete) {
    for (auto b : s.bins) detail::put_le<std::uint32_t>(out, b);
  } else {
    for (double v : s.points) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      detail::put_le<std::uint64_t>(out, bits);
    }
  }
  return out;
}

inline SampleSet decode_binary(const std::string& in) {
  if (in.size() < 24 || std::memcmp(in.data(), kMagic, 8) != 0) throw FormatError("not an LFHTSAMP file");
  std::size_t pos = 8;
  const auto kind = detail::get_le<std::uint8_t>(in, pos);
  const auto source = detail::get_le<std::uint8_t>(in, pos);
  (void)detail::get_le<std::uint16_t>(in, pos);
  const auto dim = detail::get_le<std::uint32_t>(in, pos);
  const auto count = detail::get_le<std::uint64_t>(in, pos);
  if (kind > 2 || source > 2) throw FormatError("bad sample header");
  const std::size_t width = kind == 0 ? 4 : 8 * static_cast<std::size_t>(dim);
  if (kind != 0 && dim == 0) throw FormatError("bad sample dimension");
  if (count > (in.size() - pos) / std::max<std::size_t>(width, 1) || pos + count * width != in.size())
    throw FormatError("sample payload size mismatch");
  const auto src = static_cast<Source>(source);
  try {
    if (kind == 0) {
      std::vector<std::uint32_t> bins(count);
      for (auto& b : bins) b = detail::get_le<std::uint32_t>(in, pos);
      return SampleSet::discrete(dim, std::move(bins), src);
    }
    std::vector<double> pts(count * dim);
    for (auto& v : pts) {
      const auto bits = detail::get_le<std::uint64_t>(in, pos);
      std::memcpy(&v, &bits, sizeof v);
    }
    return kind == 1 ? SampleSet::cube(dim, std::move(pts), src) : SampleSet::sequence(dim, std::move(pts), src);
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("invalid sample contents: ") + e.what());
  }
}

/// Newline-delimited 1-based bin labels. k = 0 takes the largest label.
inline SampleSet decode_text(const std::string& in, std::size_t k = 0, Source src = Source::X) {
  std::istringstream is(in);
  std::vector<std::uint32_t> bins;
  std::string line;
  std::size_t max_label = 0;
  while (std::getline(is, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(line.substr(first), &used);
    } catch (const std::exception&) {
      throw FormatError("bad label line: " + line);
    }
    if (v < 1) throw FormatError("labels are 1-based");
    max_label = std::max<std::size_t>(max_label, v);
    bins.push_back(static_cast<std::uint32_t>(v - 1));
  }
  if (k == 0) k = max_label;
  if (max_label > k) throw FormatError("label exceeds alphabet size");
  return SampleSet::discrete(k, std::move(bins), src);
}

inline std::string encode_text(const SampleSet& s) {
  require(s.kind == SampleKind::Discrete, "text format holds discrete samples only");
  std::string out;
  for (auto b : s.bins) out += std::to_string(b + 1) + '\n';
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot write " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

/// Auto-detects binary vs text by the magic bytes.
inline SampleSet load_sample(const std::string& path, std::size_t k = 0, Source src = Source::X) {
  const auto bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kMagic, 8) == 0) {
    auto s = decode_binary(bytes);
    s.source = src;
    return s;
  }
  return decode_text(bytes, k, src);
}

// ---------------------------------------------------------------------------
// Fingerprint CSV: tuple,count with the tuple as ';'-joined counts.

inline std::string fingerprint_csv(const Fingerprint& fp) {
  std::string out = "tuple,count\n";
  for (const auto& [t, c] : fp.counts) {
    for (std::size_t i = 0; i < t.size(); ++i) out += (i ? ";" : "") + std::to_string(t[i]);
    out += ',' + std::to_string(c) + '\n';
  }
  return out;
}

}  // namespace lfht::io
