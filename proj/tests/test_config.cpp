#include <gtest/gtest.h>

#include "ralstm/config.hpp"
#include "support.hpp"

namespace ralstm {
namespace {

TEST(ConfigText, CommentsBlankLinesAndWhitespace) {
  const auto kv = parse_config_text("# header\n\nhidden = 40   # trailing\n  beam=5\r\n", "c.cfg");
  EXPECT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv.at("hidden"), "40");
  EXPECT_EQ(kv.at("beam"), "5");
}

TEST(ConfigText, MalformedLinesReportedTogether) {
  try {
    parse_config_text("hidden 40\nbeam = 5\n= 3\n", "c.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.problems().size(), 2u);
    EXPECT_NE(e.problems()[0].find("c.cfg:1"), std::string::npos);
    EXPECT_NE(e.problems()[1].find("c.cfg:3"), std::string::npos);
  }
}

TEST(Resolve, DefaultsMatchPublishedSetup) {
  const RunConfig c = resolve_config({}, {});
  EXPECT_EQ(c.train.hidden, 80);
  EXPECT_EQ(c.train.dropout, 0.7);
  EXPECT_EQ(c.beam.beam_width, 10);
  EXPECT_EQ(c.beam.lambda, 1000.0);
  EXPECT_EQ(c.train.variant, CellVariant::kFull);
  EXPECT_EQ(c.split.train, 3);
  EXPECT_EQ(c.split.validation, 1);
  EXPECT_EQ(c.split.test, 1);
  EXPECT_EQ(c.runs, 1);
}

TEST(Resolve, OverridesBeatFileBeatDefaults) {
  const KeyValues file{{"hidden", "40"}, {"beam", "5"}, {"dropout", "0.2"}};
  const KeyValues over{{"hidden", "20"}};
  const RunConfig c = resolve_config(file, over);
  EXPECT_EQ(c.train.hidden, 20);             // override
  EXPECT_EQ(c.beam.beam_width, 5);           // file
  EXPECT_EQ(c.train.dropout, 0.2);           // file
  EXPECT_EQ(c.beam.overgen, BeamConfig{}.overgen);  // default
}

TEST(Resolve, EveryProblemIsReported) {
  const KeyValues file{{"hidden", "abc"}, {"colour", "blue"}, {"variant", "half"}};
  const KeyValues over{{"dropout", "1.5"}, {"split", "3-1-1"}};
  try {
    resolve_config(file, over);
    FAIL();
  } catch (const ConfigError& e) {
    const auto& p = e.problems();
    ASSERT_EQ(p.size(), 5u) << e.what();
    auto has = [&](const std::string& needle) {
      for (const auto& s : p)
        if (s.find(needle) != std::string::npos) return true;
      return false;
    };
    EXPECT_TRUE(has("unknown key 'colour'"));
    EXPECT_TRUE(has("hidden = 'abc'"));
    EXPECT_TRUE(has("variant = 'half'"));
    EXPECT_TRUE(has("split = '3-1-1'"));
    EXPECT_TRUE(has("dropout"));
  }
}

TEST(Resolve, ListsBoolsAndVariantAliases) {
  const RunConfig c = resolve_config(
      {{"data", "a, b,,c"}, {"shuffle", "no"}, {"variant", "without-refinement"},
       {"split", "8:1:1"}, {"l2_mode", "accumulated"}},
      {});
  EXPECT_EQ(c.data, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_FALSE(c.train.shuffle);
  EXPECT_EQ(c.train.variant, CellVariant::kWithoutRefinement);
  EXPECT_EQ(c.split.train, 8);
  EXPECT_EQ(c.train.l2_mode, L2Mode::kAccumulated);
}

TEST(Resolve, KeyValuesRoundTrip) {
  RunConfig c = resolve_config({{"learning_rate", "0.1"}, {"lambda", "12.5"}, {"data", "x,y"}}, {});
  const KeyValues kv = to_key_values(c);
  EXPECT_EQ(kv.size(), config_keys().size());
  for (const auto& [k, _] : config_keys()) EXPECT_TRUE(kv.count(k)) << k;
  const RunConfig back = resolve_config(kv, {});
  EXPECT_EQ(to_key_values(back), kv);
  EXPECT_EQ(back.train.learning_rate, 0.1);
}

TEST(Manifest, JsonRoundTrip) {
  RunManifest m;
  m.command = "generate";
  m.command_line = {"ralstm", "generate", "--da", "inform(name=x)"};
  m.config = to_key_values(resolve_config({}, {}));
  m.arguments = {{"da", {"inform(name=x)"}}, {"flag", {""}}};
  m.seed = 12;
  m.datasets.push_back({"/d", "00ff", 3, 1, 1});
  m.checkpoint = "/m.ckpt";
  m.timestamp = utc_timestamp();
  m.outputs = {"generated.tsv"};
  testing::TempDir dir;
  m.write(dir.str("manifest.json"));
  const RunManifest back = RunManifest::read(dir.str("manifest.json"));
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(back.timestamp.size(), 20u);
  EXPECT_EQ(back.timestamp.back(), 'Z');

  testing::write_file(dir.str("bad.json"), "{\"config\": {}}");
  EXPECT_THROW(RunManifest::read(dir.str("bad.json")), ConfigError);
  testing::write_file(dir.str("junk.json"), "{");
  EXPECT_THROW(RunManifest::read(dir.str("junk.json")), ConfigError);
}

TEST(Manifest, Hex64) {
  EXPECT_EQ(hex64(0), "0000000000000000");
  EXPECT_EQ(hex64(0xcbf29ce484222325ULL), "cbf29ce484222325");
}

}  // namespace
}  // namespace ralstm
