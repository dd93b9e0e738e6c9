#include "ralstm/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ralstm {

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

template <typename M>
BoundModel bind_impl(Graph& g, M& model) {
  auto& ps = model.params();
  BoundModel b;
  b.enc.slot_embed = g.param(ps.at("enc.slot_embed"));
  b.enc.value_embed = g.param(ps.at("enc.value_embed"));
  b.enc.act_embed = g.param(ps.at("enc.act_embed"));
  b.enc.fwd_w = g.param(ps.at("enc.fwd.w"));
  b.enc.fwd_b = g.param(ps.at("enc.fwd.b"));
  b.enc.bwd_w = g.param(ps.at("enc.bwd.w"));
  b.enc.bwd_b = g.param(ps.at("enc.bwd.b"));
  b.enc.att_w = g.param(ps.at("att.w"));
  b.enc.att_u = g.param(ps.at("att.u"));
  b.enc.att_v = g.param(ps.at("att.v"));
  b.dec.embed = g.param(ps.at("dec.embed"));
  b.dec.w_rd = g.param(ps.at("dec.w_rd"));
  b.dec.w_rh = g.param(ps.at("dec.w_rh"));
  b.dec.w = g.param(ps.at("dec.w"));
  b.dec.b = g.param(ps.at("dec.b"));
  b.dec.w_cr = g.param(ps.at("dec.w_cr"));
  b.dec.w_ax = g.param(ps.at("dec.w_ax"));
  b.dec.w_ah = g.param(ps.at("dec.w_ah"));
  b.dec.w_os = g.param(ps.at("dec.w_os"));
  b.dec.w_ho = g.param(ps.at("dec.w_ho"));
  return b;
}

Tensor dropout_mask(int n, const DropoutSpec& d) {
  const double keep = 1.0 - d.rate;
  Tensor m(n, 1);
  for (int i = 0; i < n; ++i) m(i, 0) = unit_uniform(*d.rng) < keep ? 1.0 / keep : 0.0;
  return m;
}

}  // namespace

Model::Model(DomainSchema schema, Vocab vocab, int hidden, CellVariant variant)
    : schema_(std::move(schema)), vocab_(std::move(vocab)), hidden_(hidden),
      variant_(variant) {
  if (hidden_ < 2 || hidden_ % 2 != 0)
    throw ConfigError({"hidden size must be an even number >= 2"});
  if (schema_.acts().empty()) throw SchemaError("schema has no act types");
  create_parameters();
}

void Model::create_parameters() {
  const int n = hidden_;
  const int m = n / 2;
  const int f = feature_size();
  const int v = vocab_.size();
  auto z = [](int r, int c) { return Tensor::Zero(r, c); };
  params_ = ParameterSet();
  params_.add("enc.slot_embed", z(vocab_.slot_table_size(), m));
  params_.add("enc.value_embed", z(vocab_.value_table_size(), m));
  params_.add("enc.act_embed", z(static_cast<int>(schema_.acts().size()), n));
  params_.add("enc.fwd.w", z(4 * n, 2 * n));
  params_.add("enc.fwd.b", z(4 * n, 1));
  params_.add("enc.bwd.w", z(4 * n, 2 * n));
  params_.add("enc.bwd.b", z(4 * n, 1));
  params_.add("att.w", z(n, n));
  params_.add("att.u", z(n, n));
  params_.add("att.v", z(1, n));
  params_.add("dec.embed", z(v, n));
  params_.add("dec.w_rd", z(n, 2 * n));
  params_.add("dec.w_rh", z(n, n));
  params_.add("dec.w", z(4 * n, 4 * n));
  params_.add("dec.b", z(4 * n, 1));
  params_.add("dec.w_cr", z(n, n));
  params_.add("dec.w_ax", z(f, n));
  params_.add("dec.w_ah", z(f, n));
  params_.add("dec.w_os", z(n, f));
  params_.add("dec.w_ho", z(v, n));
}

void Model::initialize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  for (auto& p : params_) {
    const bool bias = p.name.size() >= 2 && p.name.compare(p.name.size() - 2, 2, ".b") == 0;
    if (bias) {
      p.value.setZero();
      p.value.middleRows(hidden_, hidden_).setOnes();
    } else {
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        for (Eigen::Index r = 0; r < p.value.rows(); ++r)
          p.value(r, c) = scale * (2.0 * unit_uniform(rng) - 1.0);
    }
    p.grad.setZero();
  }
}

nlohmann::json Model::header() const {
  return {{"format", "ralstm-model"},
          {"hidden", hidden_},
          {"variant", to_string(variant_)},
          {"schema", schema_.to_json()},
          {"vocab", vocab_.to_json()},
          {"vocab_hash", hex64(vocab_.hash())}};
}

std::string Model::serialize() const { return serialize_checkpoint(header(), params_); }

void Model::save(const std::string& path) const { write_checkpoint(path, header(), params_); }

Model Model::load(const std::string& path) { return from_checkpoint(read_checkpoint(path)); }

Model Model::from_checkpoint(const Checkpoint& ck) {
  const auto& h = ck.header;
  if (h.value("format", "") != "ralstm-model")
    throw DataError("checkpoint header is not a ralstm model");
  Vocab vocab;
  DomainSchema schema;
  try {
    vocab = Vocab::from_json(h.at("vocab"));
    schema = DomainSchema::from_json(h.at("schema"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  const std::string stored = h.value("vocab_hash", "");
  if (stored != hex64(vocab.hash()))
    throw DataError("vocabulary hash mismatch: checkpoint records " + stored +
                    " but its vocabulary hashes to " + hex64(vocab.hash()) +
                    "; the file is corrupt or was built for another vocabulary");
  Model model(std::move(schema), std::move(vocab), h.at("hidden").get<int>(),
              parse_variant(h.at("variant").get<std::string>()));
  if (ck.params.size() != model.params_.size())
    throw DataError("checkpoint holds " + std::to_string(ck.params.size()) +
                    " tensors, expected " + std::to_string(model.params_.size()));
  for (auto& p : model.params_) {
    if (!ck.params.contains(p.name)) throw DataError("checkpoint lacks tensor " + p.name);
    const Tensor& t = ck.params.at(p.name).value;
    if (t.rows() != p.value.rows() || t.cols() != p.value.cols())
      throw DataError("checkpoint tensor " + p.name + " has wrong shape");
    p.value = t;
  }
  return model;
}

int Model::load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file " + path);
  Tensor& table = params_.at("dec.embed").value;
  int replaced = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    for (double x; ls >> x;) values.push_back(x);
    if (static_cast<int>(values.size()) != hidden_)
      throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                      std::to_string(hidden_) + " values, found " +
                      std::to_string(values.size()));
    const int id = vocab_.token_id(token);
    if (id == Vocab::kUnk && token != "<unk>") continue;
    for (int k = 0; k < hidden_; ++k) table(id, k) = values[k];
    ++replaced;
  }
  return replaced;
}

BoundModel bind(Graph& g, Model& model) { return bind_impl(g, model); }
BoundModel bind(Graph& g, const Model& model) { return bind_impl(g, model); }

EncodedDa encode_da(Graph& g, const BoundModel& bound, const Model& model,
                    const DialogueAct& da) {
  EncodedDa out;
  const DialogueAct sorted = sort_pairs_for_encoder(da);
  auto ids = pair_ids(sorted, model.vocab(), &model.schema(), &out.unknown_pairs);
  auto z = embed_pairs(g, bound.enc, ids);
  out.sequence = bilstm_encode(g, bound.enc, z, model.hidden());
  out.memory = make_attention_memory(g, bound.enc, out.sequence.states);
  auto act = model.schema().act_index(da.act);
  if (!act) throw SchemaError("act type '" + da.act + "' not in schema");
  out.act = g.select_row(bound.enc.act_embed, *act);
  out.s0 = g.input(encode_da_features(da, model.schema()).bits);
  return out;
}

Var sequence_nll(Graph& g, const std::vector<Var>& logits,
                 const std::vector<int>& targets) {
  if (logits.size() != targets.size() || logits.empty())
    throw ShapeError("sequence_nll: " + std::to_string(logits.size()) +
                     " logits for " + std::to_string(targets.size()) + " targets");
  Var total;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    Var p = g.select_row(g.softmax(logits[t]), targets[t]);
    Var nll = g.negate(g.log(p, 1e-12));
    total = total.valid() ? g.add(total, nll) : nll;
  }
  return total;
}

SequenceLoss sequence_loss(Graph& g, const BoundModel& bound, const Model& model,
                           const DialogueAct& da, const std::vector<int>& tokens,
                           const DropoutSpec& dropout) {
  const int n = model.hidden();
  EncodedDa enc = encode_da(g, bound, model, da);
  Var zero = g.input(Tensor::Zero(n, 1));
  StepVars state{zero, zero, enc.s0};

  std::vector<int> inputs{Vocab::kBos};
  inputs.insert(inputs.end(), tokens.begin(), tokens.end());
  std::vector<int> targets(tokens);
  targets.push_back(Vocab::kEos);

  SequenceLoss out;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    StepDropout masks;
    if (dropout.rate > 0.0 && dropout.rng) {
      masks.embed_mask = g.input(dropout_mask(n, dropout));
      masks.output_mask = g.input(dropout_mask(n, dropout));
    }
    auto step = decoder_step(g, bound.enc, bound.dec, enc.memory, enc.act, state,
                             inputs[t], model.variant(), n, masks);
    state = step.state;
    out.logits.push_back(step.logits);
  }
  out.loss = sequence_nll(g, out.logits, targets);
  out.steps = static_cast<int>(targets.size());
  return out;
}

// ---------------------------------------------------------------------------
// DecoderSession

DecoderSession::DecoderSession(const Model& model, const DialogueAct& da)
    : model_(model) {
  Graph g;
  BoundModel b = bind(g, model);
  EncodedDa enc = encode_da(g, b, model, da);
  for (Var e : enc.memory.states) states_.push_back(g.value(e));
  for (Var e : enc.memory.projected) projected_.push_back(g.value(e));
  act_ = g.value(enc.act);
  s0_ = g.value(enc.s0);
}

DecoderState DecoderSession::initial_state() const {
  const int n = model_.hidden();
  return {Vector::Zero(n), Vector::Zero(n), s0_};
}

DecoderSession::Step DecoderSession::step(const DecoderState& state, int token) const {
  Graph g;
  BoundModel b = bind(g, model_);
  AttentionMemory memory;
  for (std::size_t i = 0; i < states_.size(); ++i) {
    memory.states.push_back(g.input(states_[i]));
    memory.projected.push_back(g.input(projected_[i]));
  }
  Var act = g.input(act_);
  StepVars prev{g.input(state.h), g.input(state.c), g.input(state.s)};
  auto out = decoder_step(g, b.enc, b.dec, memory, act, prev, token,
                          model_.variant(), model_.hidden());
  Step s;
  s.state = {g.value(out.state.h), g.value(out.state.c), g.value(out.state.s)};
  const Tensor& logits = g.value(out.logits);
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  s.log_probs = (logits.array() - lse).matrix();
  s.attention = g.value(out.attention.weights);
  return s;
}

double DecoderSession::score(const std::vector<int>& tokens) const {
  DecoderState state = initial_state();
  int input = Vocab::kBos;
  double cost = 0.0;
  for (int t : tokens) {
    auto s = step(state, input);
    cost -= s.log_probs(t);
    state = s.state;
    input = t;
  }
  return cost;
}

bool is_generatable(int token) {
  return token != Vocab::kPad && token != Vocab::kBos && token != Vocab::kUnk;
}

}  // namespace ralstm
