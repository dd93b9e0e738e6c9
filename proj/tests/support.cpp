#include "support.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace ralstm::testing {

std::string source_path(const std::string& rel) {
  return (std::filesystem::path(RALSTM_SOURCE_DIR) / rel).string();
}

std::string synthetic_dir() { return source_path("data/synthetic"); }

std::string binary_path() { return RALSTM_BINARY; }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("ralstm-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string TempDir::str(const std::string& child) const {
  return child.empty() ? path_.string() : (path_ / child).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DomainSchema restaurant_schema() {
  return DomainSchema({"inform", "request", "compare"},
                      {{"name", true},
                       {"food", true},
                       {"area", true},
                       {"pricerange", true},
                       {"phone", true},
                       {"kidsallowed", false}});
}

DialogueAct random_da(std::mt19937_64& rng) {
  static const std::vector<std::string> acts{"inform", "request", "compare"};
  static const std::vector<std::string> slots{"name", "food", "area", "pricerange", "phone",
                                              "kidsallowed"};
  static const std::vector<std::string> values{
      "bar crudo", "thai", "north", "cheap", "01223 350 420", "la 'mimosa'",
      "a;b", "x,y", "quote\"d", "back\\slash", "seafood (fresh)", "da vinci"};
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  DialogueAct da;
  da.act = acts[pick(acts.size())];
  da.query = pick(5) == 0;
  const std::size_t count = pick(5);
  for (std::size_t i = 0; i < count; ++i) {
    SlotValue p;
    p.slot = slots[pick(slots.size())];
    switch (pick(8)) {
      case 0: p.kind = ValueKind::kAbsent; break;
      case 1: p.kind = ValueKind::kNone; p.value = "none"; break;
      case 2: p.kind = ValueKind::kYes; p.value = "yes"; break;
      case 3: p.kind = ValueKind::kDontCare; p.value = "dontcare"; break;
      default: p.value = values[pick(values.size())]; break;
    }
    da.pairs.push_back(p);
  }
  return da;
}

Model toy_model(std::uint64_t seed, int hidden, double scale, CellVariant variant) {
  DomainSchema schema({"inform"}, {});
  Vocab vocab = Vocab::build(schema, {{"a", "b"}}, {});
  Model m(schema, vocab, hidden, variant);
  m.initialize(seed, scale);
  return m;
}

Model small_model(std::uint64_t seed, int hidden, CellVariant variant, double scale) {
  DomainSchema schema = restaurant_schema();
  std::vector<std::vector<std::string>> sentences{
      {"SLOT_NAME", "is", "a", "nice", "place", "."},
      {"it", "serves", "SLOT_FOOD", "food", "in", "the", "SLOT_AREA", "area", "."},
      {"which", "area", "?"}};
  Vocab vocab = Vocab::build(schema, sentences, {});
  Model m(schema, vocab, hidden, variant);
  m.initialize(seed, scale);
  return m;
}

double graph_cost(const Model& model, const DialogueAct& da, const std::vector<int>& ids,
                  bool with_eos) {
  Graph g;
  BoundModel b = bind(g, model);
  SequenceLoss sl = sequence_loss(g, b, model, da, ids);
  const std::size_t steps = with_eos ? ids.size() + 1 : ids.size();
  double cost = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor& logits = g.value(sl.logits[t]);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    const int target = t < ids.size() ? ids[t] : Vocab::kEos;
    cost += lse - logits(target, 0);
  }
  return cost;
}

}  // namespace ralstm::testing
