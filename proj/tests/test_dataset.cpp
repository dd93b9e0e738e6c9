#include <gtest/gtest.h>

#include <set>

#include "ralstm/dataset.hpp"
#include "support.hpp"

namespace ralstm {
namespace {

using testing::TempDir;
using testing::write_file;

TEST(LoadDataset, SyntheticSplitsAndSchema) {
  DatasetInfo info;
  const CorpusSplits s = load_dataset(testing::synthetic_dir(), {}, &info);
  EXPECT_EQ(s.train.size(), 36u);
  EXPECT_EQ(s.validation.size(), 12u);
  EXPECT_EQ(s.test.size(), 12u);
  ASSERT_TRUE(info.schema.has_value());
  EXPECT_EQ(info.schema->acts().size(), 3u);
  EXPECT_FALSE(info.presplit);
  EXPECT_NE(info.content_hash, 0u);

  std::set<std::string> train_das;
  for (const auto& e : s.train) train_das.insert(render_da(e.da));
  for (const auto& e : s.test) EXPECT_EQ(train_das.count(render_da(e.da)), 0u) << e.da_text;
}

TEST(LoadDataset, SyntheticTemplatesMatchDelexicalization) {
  // Third field of every entry is the delexicalized form, written by hand.
  const std::string text = testing::read_file(testing::synthetic_dir() + "/examples.json");
  const auto j = nlohmann::json::parse(text);
  const DomainSchema schema = DomainSchema::load(testing::synthetic_dir() + "/schema.json");
  ASSERT_EQ(j.size(), 60u);
  for (const auto& e : j) {
    const DialogueAct da = parse_da(e[0].get<std::string>());
    const auto d = delexicalize(e[1].get<std::string>(), da, &schema);
    EXPECT_EQ(join_tokens(d.tokens), e[2].get<std::string>())
        << e[0].get<std::string>();
  }
}

TEST(LoadDataset, RoundTripOnSynthetic) {
  DatasetInfo info;
  const CorpusSplits s = load_dataset(testing::synthetic_dir(), {}, &info);
  std::vector<Example> all = s.train;
  all.insert(all.end(), s.test.begin(), s.test.end());
  const auto r = check_round_trip(all, &*info.schema);
  EXPECT_EQ(r.checked, all.size());
  EXPECT_TRUE(r.failures.empty());
}

TEST(LoadDataset, PresplitFilesWin) {
  TempDir dir;
  write_file(dir.str("train.json"), R"J([["inform(a=1)", "one"], ["inform(a=2)", "two"]])J");
  write_file(dir.str("valid.json"), R"J([["inform(a=3)", "three"]])J");
  write_file(dir.str("test.json"), "# comment line\n[[\"inform(a=4)\", \"four\", \"x\"]]");
  DatasetInfo info;
  const CorpusSplits s = load_dataset(dir.str(), {}, &info);
  EXPECT_TRUE(info.presplit);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 1u);
  EXPECT_EQ(s.test[0].reference, "four");
}

TEST(LoadDataset, RatioSplitInFileOrder) {
  TempDir dir;
  std::string body = "[";
  for (int i = 0; i < 10; ++i) {
    if (i) body += ",";
    body += "[\"inform(a=" + std::to_string(i) + ")\", \"r" + std::to_string(i) + "\"]";
  }
  write_file(dir.str("b.json"), body + "]");
  write_file(dir.str("a.json"), R"J([["request(a)", "first"]])J");
  const CorpusSplits s = load_dataset(dir.str(), SplitRatio{8, 1, 2});
  EXPECT_EQ(s.train.size(), 8u);
  EXPECT_EQ(s.validation.size(), 1u);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(s.train[0].reference, "first");
  EXPECT_EQ(s.test.back().reference, "r9");
}

TEST(LoadDataset, EmptyDirectoryIsNoData) {
  TempDir dir;
  try {
    load_dataset(dir.str());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no data"), std::string::npos);
  }
  EXPECT_THROW(load_dataset(dir.str("missing")), DataError);
}

TEST(LoadDataset, MalformedEntryReportsFileAndLine) {
  TempDir dir;
  write_file(dir.str("x.json"), "[\n[\"inform(a=1)\", \"ok\"],\n[\"inform(a=\", \"bad\"]\n]");
  try {
    load_dataset(dir.str());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("x.json:3"), std::string::npos) << e.what();
  }
  write_file(dir.str("x.json"), "[\n[\"inform(a=1)\", \"ok\"],\n oops\n]");
  try {
    load_dataset(dir.str());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("x.json:3"), std::string::npos) << e.what();
  }
}

TEST(LoadDatasets, MergesAndTagsSource) {
  TempDir a, b;
  write_file(a.str("d.json"), R"J([["inform(x=1)", "one"]])J");
  write_file(b.str("d.json"), R"J([["inform(y=2)", "two"]])J");
  std::vector<DatasetInfo> infos;
  const CorpusSplits s = load_datasets({a.str(), b.str()}, SplitRatio{1, 0, 0}, &infos);
  ASSERT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.train[0].source, 0);
  EXPECT_EQ(s.train[1].source, 1);
  EXPECT_EQ(infos.size(), 2u);
  EXPECT_NE(infos[0].content_hash, infos[1].content_hash);
}

TEST(InferSchema, FirstSeenOrderAndDelexFlag) {
  CorpusSplits s;
  s.train.push_back({parse_da("inform(name=x;kids=yes)"), "", "", 0});
  s.test.push_back({parse_da("request(area)"), "", "", 0});
  const DomainSchema schema = infer_schema(s);
  EXPECT_EQ(schema.acts(), (std::vector<std::string>{"inform", "request"}));
  EXPECT_EQ(schema.slots(), (std::vector<std::string>{"name", "kids", "area"}));
  EXPECT_TRUE(schema.is_delexicalizable("name"));
  EXPECT_FALSE(schema.is_delexicalizable("kids"));
  EXPECT_FALSE(schema.is_delexicalizable("area"));
  EXPECT_THROW(infer_schema(CorpusSplits{}), DataError);
}

TEST(DelexCache, RoundTripAndVersionCheck) {
  TempDir dir;
  std::vector<DelexExample> ex{{parse_da("inform(name='a;b')"), {"SLOT_NAME", "is", "."}},
                               {parse_da("request()"), {}}};
  write_delex_cache(dir.str("c.tsv"), ex);
  const auto back = read_delex_cache(dir.str("c.tsv"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].da, ex[0].da);
  EXPECT_EQ(back[0].tokens, ex[0].tokens);
  EXPECT_TRUE(back[1].tokens.empty());

  write_file(dir.str("bad.tsv"), "#something-else\n");
  EXPECT_THROW(read_delex_cache(dir.str("bad.tsv")), DataError);
}

TEST(RoundTrip, UnmatchedValuesAreSkipped) {
  std::vector<Example> ex{{parse_da("inform(name=x)"), "inform(name=x)", "nothing here", 0},
                          {parse_da("inform(name=y)"), "inform(name=y)", "y is good", 0}};
  const auto r = check_round_trip(ex, nullptr);
  EXPECT_EQ(r.checked, 1u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_TRUE(r.failures.empty());
}

}  // namespace
}  // namespace ralstm
