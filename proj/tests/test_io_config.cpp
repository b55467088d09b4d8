#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "lfht/config.hpp"
#include "lfht/io.hpp"

using namespace lfht;
namespace fs = std::filesystem;

TEST(Binary, RoundTripAllKinds) {
  const auto d = SampleSet::discrete(7, {0, 6, 3, 3}, Source::Y);
  const auto c = SampleSet::cube(2, {0.1, 0.9, 0.5, 0.0}, Source::Z);
  const auto s = SampleSet::sequence(3, {1.5, -2.25, 1e-300, 0.0, 3.0, -0.0});
  for (const auto* set : {&d, &c, &s}) {
    const auto back = io::decode_binary(io::encode_binary(*set));
    EXPECT_EQ(back.kind, set->kind);
    EXPECT_EQ(back.source, set->source);
    EXPECT_EQ(back.dim, set->dim);
    EXPECT_EQ(back.bins, set->bins);
    EXPECT_EQ(back.points, set->points);
  }
}

TEST(Binary, HeaderLayout) {
  const auto bytes = io::encode_binary(SampleSet::discrete(5, {1, 2}));
  ASSERT_EQ(bytes.size(), 24u + 8u);
  EXPECT_EQ(bytes.substr(0, 8), "LFHTSAMP");
  EXPECT_EQ(bytes[8], 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 5);
  EXPECT_EQ(static_cast<unsigned char>(bytes[16]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[24]), 1);
}

TEST(Binary, Rejections) {
  auto bytes = io::encode_binary(SampleSet::discrete(5, {1, 2}));
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(io::decode_binary(bad), FormatError);
  EXPECT_THROW(io::decode_binary(bytes.substr(0, bytes.size() - 1)), FormatError);
  EXPECT_THROW(io::decode_binary(bytes + "x"), FormatError);
  bad = bytes;
  bad[24] = 9;  // index outside the alphabet
  EXPECT_THROW(io::decode_binary(bad), FormatError);
  bad = bytes;
  bad[8] = 7;
  EXPECT_THROW(io::decode_binary(bad), FormatError);
  EXPECT_THROW(io::decode_binary("LFHT"), FormatError);
}

TEST(Text, RoundTripAndLabels) {
  const auto s = SampleSet::discrete(4, {0, 3, 2});
  EXPECT_EQ(io::encode_text(s), "1\n4\n3\n");
  const auto back = io::decode_text("# comment\n1\n\n4\n 3\n", 4);
  EXPECT_EQ(back.bins, s.bins);
  EXPECT_EQ(io::decode_text("2\n5\n").dim, 5u);
  EXPECT_THROW(io::decode_text("0\n"), FormatError);
  EXPECT_THROW(io::decode_text("abc\n"), FormatError);
  EXPECT_THROW(io::decode_text("5\n", 4), FormatError);
  EXPECT_THROW(io::encode_text(SampleSet::cube(1, {0.5})), PreconditionError);
}

TEST(Files, LoadDetectsFormat) {
  const auto dir = fs::temp_directory_path() / "lfht_io_test";
  fs::create_directories(dir);
  const auto s = SampleSet::discrete(6, {5, 0, 1});
  io::write_file((dir / "a.bin").string(), io::encode_binary(s));
  io::write_file((dir / "a.txt").string(), io::encode_text(s));
  const auto a = io::load_sample((dir / "a.bin").string(), 0, Source::Z);
  const auto b = io::load_sample((dir / "a.txt").string(), 6);
  EXPECT_EQ(a.bins, s.bins);
  EXPECT_EQ(a.source, Source::Z);
  EXPECT_EQ(b.bins, s.bins);
  EXPECT_THROW(io::read_file((dir / "missing").string()), FormatError);
  fs::remove_all(dir);
}

TEST(DistributionJson, RoundTrips) {
  const auto p = make_discrete_pmf({1, 2, 3});
  const auto [u, f] = smooth_bump_pair(1.0, 2, 5000.0, 0.04, std::nullopt, 3);
  GaussianSequenceSpec g{{0.5, -0.25}};
  g.gamma = {0.1, 0.2};
  for (const Distribution& d : {Distribution(p), Distribution(f), Distribution(g)}) {
    const auto j = io::to_json(d);
    const auto back = io::distribution_from_json(j);
    EXPECT_EQ(io::to_json(back), j) << j.dump();
  }
}

TEST(DistributionJson, Rejections) {
  EXPECT_THROW(io::distribution_from_json(nlohmann::json::parse(R"({"kind":"weird"})")), FormatError);
  EXPECT_THROW(io::distribution_from_json(nlohmann::json::parse(R"({"weights":[1]})")), FormatError);
  EXPECT_THROW(io::distribution_from_json(nlohmann::json::parse(R"({"kind":"discrete","weights":"x"})")),
               FormatError);
  EXPECT_THROW(io::distribution_from_json(nlohmann::json::array()), FormatError);
}

TEST(Fingerprint, Csv) {
  Fingerprint fp;
  fp.counts[{1, 0, 2}] = 3;
  fp.counts[{0, 0, 1}] = 1;
  EXPECT_EQ(io::fingerprint_csv(fp), "tuple,count\n0;0;1,1\n1;0;2,3\n");
}

TEST(Config, DefaultsAndFields) {
  const auto c = config::from_json(nlohmann::json::parse(
      R"({"class":"P_H","beta":2,"d":2,"eps":0.1,"test":{"name":"l2","c_kappa":2},"grid":{"n":{"from":8,"to":64},"m":[4]},"trials":60})"));
  EXPECT_EQ(c.cls, ClassTag::PH);
  EXPECT_EQ(c.d, 2u);
  EXPECT_EQ(c.c_kappa, 2.0);
  EXPECT_EQ(c.n_grid, (std::vector<std::size_t>{8, 16, 32, 64}));
  EXPECT_EQ(c.m_grid, (std::vector<std::size_t>{4}));
  EXPECT_EQ(config::from_json(nlohmann::json::parse(R"({"test":"huber"})")).test, TestKind::Huber);
}

TEST(Config, UnknownKeysAreErrors) {
  for (const char* text : {R"({"klass":"P_D"})", R"({"test":{"nme":"l2"}})", R"({"grid":{"q":[1]}})",
                           R"({"class":"PX"})", R"({"test":"magic"})", R"({"trials":10})", R"({"k":"ten"})",
                           R"({"grid":{"n":[-1]}})", R"([1,2])"})
    EXPECT_THROW(config::from_json(nlohmann::json::parse(text)), FormatError) << text;
}

TEST(Config, Overrides) {
  auto j = nlohmann::json::parse(R"({"eps":0.3,"test":{"name":"l2"}})");
  config::apply_override(j, "eps=0.5");
  config::apply_override(j, "test.name=scheffe");
  config::apply_override(j, "grid.n=[10,20]");
  config::apply_override(j, "instance=valiant");
  const auto c = config::from_json(j);
  EXPECT_EQ(c.eps, 0.5);
  EXPECT_EQ(c.test, TestKind::Scheffe);
  EXPECT_EQ(c.n_grid, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(c.instance, "valiant");
  EXPECT_THROW(config::apply_override(j, "noequals"), FormatError);
  EXPECT_THROW(config::apply_override(j, "a..b=1"), FormatError);
  EXPECT_THROW(config::apply_override(j, "eps.x=1"), FormatError);
}

TEST(Config, HashIsStableAndSensitive) {
  ExperimentConfig a;
  const auto h = config::config_hash(a);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(config::config_hash(config::from_json(config::to_json(a))), h);
  a.eps = 0.31;
  EXPECT_NE(config::config_hash(a), h);
  a.eps = 0.3;
  a.threads = 7;  // scheduling does not affect results
  EXPECT_EQ(config::config_hash(a), h);
}

TEST(Config, LoadFromFileWithOverrides) {
  const auto path = (fs::temp_directory_path() / "lfht_cfg_test.json").string();
  io::write_file(path, R"({"class":"P_D","k":50})");
  const auto c = config::load(path, {"k=60"});
  EXPECT_EQ(c.cls, ClassTag::PD);
  EXPECT_EQ(c.k, 60u);
  io::write_file(path, "{not json");
  EXPECT_THROW(config::load(path, {}), FormatError);
  std::remove(path.c_str());
}
