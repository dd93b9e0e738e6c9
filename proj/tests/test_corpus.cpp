#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "ralstm/corpus.hpp"
#include "support.hpp"

namespace ralstm {
namespace {

using testing::restaurant_schema;

TEST(ParseDa, SemicolonAndCommaSeparators) {
  const DialogueAct a = parse_da("inform(name='bar crudo';food=thai)");
  const DialogueAct b = parse_da("inform(name='bar crudo', food=thai)");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.act, "inform");
  ASSERT_EQ(a.pairs.size(), 2u);
  EXPECT_EQ(a.pairs[0].slot, "name");
  EXPECT_EQ(a.pairs[0].value, "bar crudo");
  EXPECT_EQ(a.pairs[1].value, "thai");
  EXPECT_EQ(a.pairs[1].kind, ValueKind::kText);
}

TEST(ParseDa, SpecialValuesAndSlotOnlyPairs) {
  const DialogueAct da = parse_da("?compare(kidsallowed=no; area=dontcare; food=none; phone; name=yes)");
  EXPECT_TRUE(da.query);
  EXPECT_EQ(da.act, "compare");
  ASSERT_EQ(da.pairs.size(), 5u);
  EXPECT_EQ(da.pairs[0].kind, ValueKind::kNo);
  EXPECT_EQ(da.pairs[1].kind, ValueKind::kDontCare);
  EXPECT_EQ(da.pairs[2].kind, ValueKind::kNone);
  EXPECT_EQ(da.pairs[3].kind, ValueKind::kAbsent);
  EXPECT_EQ(da.pairs[4].kind, ValueKind::kYes);
}

TEST(ParseDa, EmptyActAndWhitespace) {
  const DialogueAct da = parse_da("  Hello ( )  ");
  EXPECT_EQ(da.act, "hello");
  EXPECT_TRUE(da.pairs.empty());
}

TEST(ParseDa, QuotedValuesKeepSeparatorsAndEscapes) {
  const DialogueAct da = parse_da(R"(inform(name="a;b, c";food='it\'s'))");
  ASSERT_EQ(da.pairs.size(), 2u);
  EXPECT_EQ(da.pairs[0].value, "a;b, c");
  EXPECT_EQ(da.pairs[1].value, "it's");
}

TEST(ParseDa, DuplicateSlotsArePreserved) {
  const DialogueAct da = parse_da("compare(name=a;name=b;pricerange=cheap;pricerange=expensive)");
  ASSERT_EQ(da.pairs.size(), 4u);
  EXPECT_EQ(da.pairs[1].value, "b");
}

TEST(ParseDa, ErrorsCarryOffsets) {
  struct Case {
    const char* text;
    std::size_t offset;
  };
  for (const Case& c : {Case{"inform(name=x", 6}, Case{"inform name=x)", 7},
                        Case{"(name=x)", 0}, Case{"inform(name='x)", 12},
                        Case{"inform(name=x) extra", 15}, Case{"inform(=x)", 7}}) {
    try {
      parse_da(c.text);
      ADD_FAILURE() << "no error for " << c.text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), c.offset) << c.text << ": " << e.what();
    }
  }
}

TEST(ParseDa, RenderRoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const DialogueAct da = testing::random_da(rng);
    const std::string text = render_da(da);
    EXPECT_EQ(parse_da(text), da) << text;
    EXPECT_EQ(render_da(parse_da(text)), text);
  }
}

TEST(ParseDa, EncoderOrderIsStableBySlot) {
  const DialogueAct da = parse_da("inform(name=b;area=x;name=a)");
  const DialogueAct s = sort_pairs_for_encoder(da);
  EXPECT_EQ(s.pairs[0].slot, "area");
  EXPECT_EQ(s.pairs[1].value, "b");
  EXPECT_EQ(s.pairs[2].value, "a");
}

TEST(Features, ActBitPlusDistinctSlotBits) {
  const DomainSchema schema = restaurant_schema();
  const auto f = encode_da_features(parse_da("inform(name=x;food=y)"), schema);
  EXPECT_EQ(f.bits.size(), 9);
  EXPECT_EQ(f.bits.sum(), 3.0);
  EXPECT_EQ(f.bits(0), 1.0);
  EXPECT_EQ(f.bits(3), 1.0);
  EXPECT_EQ(f.bits(4), 1.0);
}

TEST(Features, EightActsTwelveSlotsGivesLengthTwenty) {
  std::vector<std::string> acts;
  for (int i = 0; i < 8; ++i) acts.push_back("a" + std::to_string(i));
  std::vector<std::pair<std::string, bool>> slots;
  for (int i = 0; i < 12; ++i) slots.emplace_back("s" + std::to_string(i), true);
  const DomainSchema schema(acts, slots);
  const auto f = encode_da_features(parse_da("a3(s1=x;s7=y)"), schema);
  EXPECT_EQ(f.bits.size(), 20);
  EXPECT_EQ(f.bits.sum(), 3.0);
}

TEST(Features, NoSlotsSetsOnlyActBit) {
  const auto f = encode_da_features(parse_da("request()"), restaurant_schema());
  EXPECT_EQ(f.bits.sum(), 1.0);
  EXPECT_EQ(f.bits(1), 1.0);
}

TEST(Features, DuplicateSlotSetsBitOnce) {
  const auto f = encode_da_features(parse_da("compare(name=a;name=b)"), restaurant_schema());
  EXPECT_EQ(f.bits.sum(), 2.0);
  EXPECT_EQ(f.bits.maxCoeff(), 1.0);
}

TEST(Features, UnknownActOrSlotThrows) {
  EXPECT_THROW(encode_da_features(parse_da("greet()"), restaurant_schema()), SchemaError);
  EXPECT_THROW(encode_da_features(parse_da("inform(stars=5)"), restaurant_schema()), SchemaError);
}

TEST(Schema, JsonRoundTripAndMerge) {
  DomainSchema s = restaurant_schema();
  const DomainSchema back = DomainSchema::from_json(s.to_json());
  EXPECT_EQ(back.acts(), s.acts());
  EXPECT_EQ(back.slots(), s.slots());
  EXPECT_FALSE(back.is_delexicalizable("kidsallowed"));

  DomainSchema other({"inform", "goodbye"}, {{"stars", true}, {"name", true}});
  s.merge(other);
  EXPECT_EQ(s.acts().back(), "goodbye");
  EXPECT_EQ(s.slots().back(), "stars");
  EXPECT_THROW(s.merge(DomainSchema({}, {{"kidsallowed", true}})), SchemaError);
}

TEST(Tokenize, LowercasesAndPadsPunctuation) {
  EXPECT_EQ(tokenize("Bar Crudo is nice, isn't it?"),
            (std::vector<std::string>{"bar", "crudo", "is", "nice", ",", "isn't", "it", "?"}));
  EXPECT_EQ(tokenize("  costs 3.50, or 1,000.  "),
            (std::vector<std::string>{"costs", "3.50", ",", "or", "1,000", "."}));
  EXPECT_TRUE(tokenize("   ").empty());
}

TEST(SlotTokens, NamingRoundTrip) {
  EXPECT_EQ(slot_token("pricerange"), "SLOT_PRICERANGE");
  EXPECT_TRUE(is_slot_token("SLOT_AREA"));
  EXPECT_FALSE(is_slot_token("SLOT_"));
  EXPECT_FALSE(is_slot_token("slot_area"));
  EXPECT_EQ(slot_of_token("SLOT_AREA"), "area");
}

TEST(Delexicalize, ReplacesValuesAndRecordsPositions) {
  const DomainSchema schema = restaurant_schema();
  const DialogueAct da = parse_da("inform(name='Bar Crudo';food=thai;kidsallowed=yes)");
  const auto d = delexicalize("Bar Crudo serves Thai food and allows kids .", da, &schema);
  EXPECT_EQ(join_tokens(d.tokens), "SLOT_NAME serves SLOT_FOOD food and allows kids .");
  ASSERT_EQ(d.occurrences.size(), 2u);
  EXPECT_EQ(d.occurrences[0].position, 0u);
  EXPECT_EQ(d.occurrences[1].position, 2u);
  EXPECT_EQ(d.occurrences[1].value, "thai");
}

TEST(Delexicalize, LongestValueWinsOverlaps) {
  // Hand oracle: "north" would match inside "north american" if the shorter
  // value were placed first.
  const DialogueAct da = parse_da("inform(area=north;food='north american')");
  const auto d = delexicalize("north american food in the north .", da);
  EXPECT_EQ(join_tokens(d.tokens), "SLOT_FOOD food in the SLOT_AREA .");
  EXPECT_EQ(d.occurrences[0].position, 4u);
  EXPECT_EQ(d.occurrences[1].position, 0u);
}

TEST(Delexicalize, RepeatedSlotTakesSuccessiveOccurrences) {
  const DialogueAct da = parse_da("compare(name=alpha;name=beta)");
  const auto d = delexicalize("beta is better than alpha", da);
  EXPECT_EQ(join_tokens(d.tokens), "SLOT_NAME is better than SLOT_NAME");
  EXPECT_EQ(d.occurrences[0].position, 4u);
  EXPECT_EQ(d.occurrences[1].position, 0u);
}

TEST(Delexicalize, UnmatchedValueIsReported) {
  const auto d = delexicalize("a place nearby", parse_da("inform(area=north)"));
  ASSERT_EQ(d.occurrences.size(), 1u);
  EXPECT_FALSE(d.occurrences[0].matched());
}

TEST(Lexicalize, FillsInDaOrderAndCountsLeftovers) {
  const DialogueAct da = parse_da("compare(name=alpha;name=beta;food=thai)");
  int unfilled = -1;
  const std::string out = lexicalize(
      {"SLOT_NAME", "and", "SLOT_NAME", "serve", "SLOT_FOOD", "SLOT_AREA", "SLOT_NAME"}, da,
      nullptr, &unfilled);
  EXPECT_EQ(out, "alpha and beta serve thai SLOT_AREA SLOT_NAME");
  EXPECT_EQ(unfilled, 2);
}

TEST(Lexicalize, RoundTripProperty) {
  const DomainSchema schema = restaurant_schema();
  std::mt19937_64 rng(5);
  const std::vector<std::string> filler{"the", "is", "a", "place", "with", "."};
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    DialogueAct da = testing::random_da(rng);
    std::vector<std::string> words;
    for (const auto& p : da.pairs) {
      words.push_back(filler[rng() % filler.size()]);
      if (is_delexicalized_pair(p, &schema)) words.push_back(p.value);
    }
    const std::string text = join_tokens(words);
    const auto d = delexicalize(text, da, &schema);
    bool all = true;
    for (const auto& o : d.occurrences) all = all && o.matched();
    if (!all) continue;  // a value occurring inside another can be consumed first
    ++checked;
    EXPECT_EQ(tokenize(lexicalize(d.tokens, da, &schema)), tokenize(text)) << render_da(da);
  }
  EXPECT_GT(checked, 150);
}

const char* kCompareDa =
    "?compare(name=\"satellite notus 19\", pricerange=\"budget\", drive=\"500 gb\", "
    "name=\"portege thanatos 98\", pricerange=\"expensive\", drive=\"128 gb\")";
const char* kCompareReference =
    "the satellite notus 19 has a 500 gb drive and is in the budget price range . on the "
    "other hand the portege thanatos 98 has a 128 gb drive and is in the expensive price "
    "range . which would you prefer";

TEST(PublishedExamples, FootnoteDa) {
  const DialogueAct da = parse_da("inform(name='Bar crudo'; food='raw food')");
  EXPECT_EQ(da.act, "inform");
  ASSERT_EQ(da.pairs.size(), 2u);
  EXPECT_EQ(da.pairs[0].value, "Bar crudo");
  EXPECT_EQ(da.pairs[1].slot, "food");
  EXPECT_EQ(da.pairs[1].value, "raw food");
}

TEST(PublishedExamples, CompareDaKeepsDuplicatesInOrder) {
  const DialogueAct da = parse_da(kCompareDa);
  EXPECT_EQ(da.act, "compare");
  EXPECT_TRUE(da.query);
  ASSERT_EQ(da.pairs.size(), 6u);
  EXPECT_EQ(da.pairs[0].value, "satellite notus 19");
  EXPECT_EQ(da.pairs[3].slot, "name");
  EXPECT_EQ(da.pairs[3].value, "portege thanatos 98");
  EXPECT_EQ(da.pairs[5].value, "128 gb");
}

TEST(PublishedExamples, InformCountWithDontCare) {
  const DialogueAct da = parse_da(
      "inform_count(count=\"73\", type=\"television\", hasusbport=\"dontcare\", hdmiport=\"2\", "
      "screensizerange=\"dontcare\")");
  EXPECT_EQ(da.act, "inform_count");
  ASSERT_EQ(da.pairs.size(), 5u);
  int dontcare = 0;
  for (const auto& p : da.pairs) dontcare += p.kind == ValueKind::kDontCare;
  EXPECT_EQ(dontcare, 2);
}

TEST(PublishedExamples, CompareReferenceDelexicalizes) {
  const DialogueAct da = parse_da(kCompareDa);
  const auto d = delexicalize("the satellite notus 19 has a 500 gb drive", da);
  EXPECT_EQ(join_tokens(d.tokens), "the SLOT_NAME has a SLOT_DRIVE drive");
  EXPECT_EQ(d.occurrences[0].value, "satellite notus 19");
  EXPECT_TRUE(d.occurrences[0].matched());
  EXPECT_EQ(d.occurrences[2].value, "500 gb");
  EXPECT_TRUE(d.occurrences[2].matched());
  EXPECT_FALSE(d.occurrences[3].matched());
}

TEST(PublishedExamples, CompareReferenceRoundTrip) {
  const DialogueAct da = parse_da(kCompareDa);
  const auto d = delexicalize(kCompareReference, da);
  for (const auto& o : d.occurrences) EXPECT_TRUE(o.matched()) << o.value;
  EXPECT_EQ(lexicalize(d.tokens, da), kCompareReference);
}

TEST(PublishedExamples, TwoNameTokensFillInDaOrder) {
  const DialogueAct da = parse_da(kCompareDa);
  EXPECT_EQ(lexicalize({"SLOT_NAME", "or", "SLOT_NAME"}, da),
            "satellite notus 19 or portege thanatos 98");
  EXPECT_EQ(lexicalize({}, da), "");
}

TEST(Delexicalize, NothingToReplaceGivesTokenizedText) {
  const DialogueAct da = parse_da("inform(kidsallowed=yes;area=dontcare)");
  const auto d = delexicalize("Kids are welcome, anywhere.", da);
  EXPECT_EQ(d.tokens, tokenize("Kids are welcome, anywhere."));
  EXPECT_TRUE(d.occurrences.empty());
}

// Exhaustive oracle: every order of placing values (each at its first free
// occurrence); the best order covers the most characters.
std::size_t covered_chars(const std::vector<std::string>& tokens) {
  std::size_t n = 0;
  for (const auto& t : tokens)
    if (!is_slot_token(t)) n += t.size();
  return n;
}

std::size_t best_coverage(const std::string& text, const DialogueAct& da) {
  const auto tokens = tokenize(text);
  std::size_t total = 0;
  for (const auto& t : tokens) total += t.size();
  std::vector<std::size_t> order(da.pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t best = 0;
  do {
    std::vector<bool> used(tokens.size(), false);
    std::size_t covered = 0;
    for (std::size_t pi : order) {
      const auto vt = tokenize(da.pairs[pi].value);
      for (std::size_t i = 0; i + vt.size() <= tokens.size(); ++i) {
        bool ok = true;
        for (std::size_t k = 0; k < vt.size() && ok; ++k)
          ok = !used[i + k] && tokens[i + k] == vt[k];
        if (!ok) continue;
        for (std::size_t k = 0; k < vt.size(); ++k) {
          used[i + k] = true;
          covered += tokens[i + k].size();
        }
        break;
      }
    }
    best = std::max(best, covered);
  } while (std::next_permutation(order.begin(), order.end()));
  return total - best;  // characters left outside slot tokens
}

TEST(Delexicalize, LongestFirstMatchesExhaustiveOrderOracle) {
  const DialogueAct da = parse_da("inform(drive='128 gb';memory=12;name='12 128 gb')");
  for (const char* text : {"it has 128 gb and 12 of ram", "12 128 gb has a 128 gb drive and 12",
                           "12 gb then 128 gb", "128 gb 12"}) {
    const auto d = delexicalize(text, da);
    EXPECT_EQ(covered_chars(d.tokens), best_coverage(text, da)) << text;
  }
  const auto d = delexicalize("it has 128 gb and 12 of ram", parse_da("inform(memory=12;drive='128 gb')"));
  EXPECT_EQ(join_tokens(d.tokens), "it has SLOT_DRIVE and SLOT_MEMORY of ram");
}

TEST(ParseDa, SortIsIdempotentPermutation) {
  const DialogueAct da = parse_da("inform(food=x;address=y)");
  const DialogueAct s = sort_pairs_for_encoder(da);
  EXPECT_EQ(s.pairs[0].slot, "address");
  EXPECT_EQ(sort_pairs_for_encoder(s), s);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const DialogueAct r = testing::random_da(rng);
    const DialogueAct sorted = sort_pairs_for_encoder(r);
    EXPECT_EQ(sort_pairs_for_encoder(sorted), sorted);
    EXPECT_TRUE(std::is_permutation(r.pairs.begin(), r.pairs.end(), sorted.pairs.begin()));
    // Naive stable insertion sort oracle.
    std::vector<SlotValue> naive;
    for (const auto& p : r.pairs) {
      auto at = naive.end();
      while (at != naive.begin() && (at - 1)->slot > p.slot) --at;
      naive.insert(at, p);
    }
    EXPECT_EQ(naive, sorted.pairs);
  }
}

TEST(Features, HammingWeightIsOnePlusDistinctSlots) {
  const DomainSchema schema = restaurant_schema();
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const DialogueAct da = testing::random_da(rng);
    std::set<std::string> slots;
    for (const auto& p : da.pairs) slots.insert(p.slot);
    EXPECT_EQ(encode_da_features(da, schema).bits.sum(), 1.0 + static_cast<double>(slots.size()));
  }
}

TEST(VocabTest, ReservedIdsAndBuildOrder) {
  const DomainSchema schema = restaurant_schema();
  const Vocab v = Vocab::build(schema, {{"hello", "SLOT_NAME", "world"}},
                               {parse_da("inform(kidsallowed=yes;food=thai)")});
  EXPECT_EQ(v.token(Vocab::kPad), "<pad>");
  EXPECT_EQ(v.token(Vocab::kBos), "<s>");
  EXPECT_EQ(v.token(Vocab::kEos), "</s>");
  EXPECT_EQ(v.token(Vocab::kUnk), "<unk>");
  EXPECT_EQ(v.token(4), "SLOT_NAME");
  EXPECT_EQ(v.token_id("hello"), 9);
  EXPECT_EQ(v.token_id("missing"), Vocab::kUnk);
  EXPECT_EQ(v.size(), 11);
  EXPECT_EQ(v.slot_id("name"), 2);
  EXPECT_EQ(v.slot_id("stars"), Vocab::kEncUnk);
  EXPECT_NE(v.value_id("SLOT_FOOD"), Vocab::kEncUnk);
  EXPECT_NE(v.value_id("yes"), Vocab::kEncUnk);
}

TEST(VocabTest, JsonRoundTripPreservesHash) {
  const Vocab v = Vocab::build(restaurant_schema(), {{"a", "b"}}, {});
  const Vocab back = Vocab::from_json(v.to_json());
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash(), v.hash());
  Vocab other = v;
  other.add_token("c");
  EXPECT_NE(other.hash(), v.hash());
}

TEST(VocabTest, RejectsTablesWithoutReservedEntries) {
  nlohmann::json j = {{"tokens", {"a"}}, {"slots", {"<unk>", "<null>"}}, {"values", {"<unk>", "<null>"}}};
  EXPECT_THROW(Vocab::from_json(j), DataError);
}

TEST(EncoderValueKey, MapsKinds) {
  const DomainSchema schema = restaurant_schema();
  const DialogueAct da = parse_da("inform(name=x;kidsallowed=Maybe;area=dontcare;phone)");
  EXPECT_EQ(encoder_value_key(da.pairs[0], &schema), "SLOT_NAME");
  EXPECT_EQ(encoder_value_key(da.pairs[1], &schema), "maybe");
  EXPECT_EQ(encoder_value_key(da.pairs[2], &schema), "dontcare");
  EXPECT_EQ(encoder_value_key(da.pairs[3], &schema), "<absent>");
}

TEST(Fnv1a, KnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
}

}  // namespace
}  // namespace ralstm
