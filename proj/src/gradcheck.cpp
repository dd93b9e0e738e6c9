#include "ralstm/gradcheck.hpp"

#include <random>

namespace ralstm {

std::vector<std::string> GradCheckDims::problems() const {
  std::vector<std::string> p;
  if (hidden < 2 || hidden % 2 != 0 || hidden > kMaxGradCheckHidden)
    p.push_back("gradcheck hidden size must be even and between 2 and " +
                std::to_string(kMaxGradCheckHidden));
  if (pairs < 1) p.push_back("gradcheck needs at least one slot-value pair");
  if (length < 0) p.push_back("gradcheck length must be >= 0");
  // specials, one slot token per pair, at least one word
  if (vocab < 4 + pairs + 1)
    p.push_back("gradcheck vocab must be >= " + std::to_string(4 + pairs + 1) +
                " for " + std::to_string(pairs) + " pairs");
  if (!(dropout >= 0.0 && dropout < 1.0)) p.push_back("gradcheck dropout must be in [0, 1)");
  if (!(epsilon > 0.0)) p.push_back("gradcheck epsilon must be > 0");
  if (!(floor > 0.0)) p.push_back("gradcheck floor must be > 0");
  return p;
}

ToyProblem make_toy_problem(const GradCheckDims& dims, CellVariant variant) {
  if (auto p = dims.problems(); !p.empty()) throw ConfigError(p);
  std::vector<std::pair<std::string, bool>> slots;
  DialogueAct da;
  da.act = "inform";
  for (int i = 0; i < dims.pairs; ++i) {
    const std::string slot = "s" + std::to_string(i);
    slots.emplace_back(slot, true);
    da.pairs.push_back({slot, "v" + std::to_string(i), ValueKind::kText});
  }
  DomainSchema schema({"inform", "request"}, slots);
  std::vector<std::string> words;
  for (int i = 0; i < dims.vocab - 4 - dims.pairs; ++i) words.push_back("w" + std::to_string(i));
  Vocab vocab = Vocab::build(schema, {words}, {da});

  Model model(schema, vocab, dims.hidden, variant);
  model.initialize(dims.seed, dims.init_scale);

  std::mt19937_64 rng(dims.seed + 17);
  std::vector<int> tokens;
  while (static_cast<int>(tokens.size()) < dims.length) {
    const int t = static_cast<int>(rng() % static_cast<std::uint64_t>(vocab.size()));
    if (is_generatable(t) && t != Vocab::kEos) tokens.push_back(t);
  }
  return {std::move(model), std::move(da), std::move(tokens)};
}

GradCheckResult model_gradcheck(const GradCheckDims& dims, CellVariant variant,
                                const std::function<void(ParameterSet&)>& tamper) {
  ToyProblem toy = make_toy_problem(dims, variant);
  Model& model = toy.model;
  LossBuilder build = [&](Graph& g, ParameterSet&) {
    std::mt19937_64 rng(dims.seed + 29);
    DropoutSpec dropout{dims.dropout, &rng};
    BoundModel b = bind(g, model);
    return sequence_loss(g, b, model, toy.da, toy.tokens, dropout).loss;
  };
  return grad_check(model.params(), build,
                    GradCheckOptions{dims.epsilon, dims.fourth_order, dims.floor}, tamper);
}

}  // namespace ralstm
