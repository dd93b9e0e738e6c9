#include "ralstm/encoder.hpp"

namespace ralstm {

std::vector<PairIds> pair_ids(const DialogueAct& da, const Vocab& vocab,
                              const DomainSchema* schema, int* unknown) {
  std::vector<PairIds> ids;
  int misses = 0;
  for (const auto& p : da.pairs) {
    PairIds id{vocab.slot_id(p.slot), vocab.value_id(encoder_value_key(p, schema))};
    misses += (id.slot == Vocab::kEncUnk) + (id.value == Vocab::kEncUnk);
    ids.push_back(id);
  }
  if (ids.empty()) ids.push_back(PairIds{});
  if (unknown) *unknown = misses;
  return ids;
}

std::vector<Var> embed_pairs(Graph& g, const EncoderParams& p,
                             const std::vector<PairIds>& ids) {
  std::vector<Var> z;
  z.reserve(ids.size());
  for (const auto& id : ids) {
    z.push_back(g.concat({g.select_row(p.slot_embed, id.slot),
                          g.select_row(p.value_embed, id.value)}));
  }
  return z;
}

LstmGates lstm_gates(Graph& g, Var w, Var b, Var in, int hidden) {
  Var pre = g.add(g.matmul(w, in), b);
  return {g.sigmoid(g.slice(pre, 0, hidden)),
          g.sigmoid(g.slice(pre, hidden, hidden)),
          g.sigmoid(g.slice(pre, 2 * hidden, hidden)),
          g.tanh(g.slice(pre, 3 * hidden, hidden))};
}

LstmCellOut lstm_cell(Graph& g, Var w, Var b, Var in, Var c_prev, int hidden) {
  LstmGates gates = lstm_gates(g, w, b, in, hidden);
  Var c = g.add(g.cmul(gates.forget, c_prev), g.cmul(gates.input, gates.candidate));
  Var h = g.cmul(gates.output, g.tanh(c));
  return {h, c, gates};
}

EncodedSequence bilstm_encode(Graph& g, const EncoderParams& p,
                              const std::vector<Var>& z, int hidden) {
  if (z.empty()) throw ShapeError("bilstm_encode: empty input sequence");
  const std::size_t len = z.size();
  EncodedSequence out;
  out.forward.resize(len);
  out.backward.resize(len);

  Var zero = g.input(Tensor::Zero(hidden, 1));
  Var h = zero, c = zero;
  for (std::size_t i = 0; i < len; ++i) {
    auto step = lstm_cell(g, p.fwd_w, p.fwd_b, g.concat({z[i], h}), c, hidden);
    h = step.h;
    c = step.c;
    out.forward[i] = h;
  }
  h = zero;
  c = zero;
  for (std::size_t k = len; k-- > 0;) {
    auto step = lstm_cell(g, p.bwd_w, p.bwd_b, g.concat({z[k], h}), c, hidden);
    h = step.h;
    c = step.c;
    out.backward[k] = h;
  }
  for (std::size_t i = 0; i < len; ++i)
    out.states.push_back(g.add(out.forward[i], out.backward[i]));
  return out;
}

AttentionMemory make_attention_memory(Graph& g, const EncoderParams& p,
                                      const std::vector<Var>& states) {
  AttentionMemory m;
  m.states = states;
  for (Var e : states) m.projected.push_back(g.matmul(p.att_w, e));
  return m;
}

Attention attend(Graph& g, const EncoderParams& p, const AttentionMemory& memory,
                 Var h_prev) {
  Var uh = g.matmul(p.att_u, h_prev);
  std::vector<Var> scores;
  scores.reserve(memory.states.size());
  for (Var we : memory.projected)
    scores.push_back(g.matmul(p.att_v, g.tanh(g.add(we, uh))));
  Attention a;
  a.scores = g.concat(scores);
  a.weights = g.softmax(a.scores);
  // Weighted sum as a sum of (n x 1) * (1 x 1) products.
  a.context = g.matmul(memory.states[0], g.select_row(a.weights, 0));
  for (std::size_t i = 1; i < memory.states.size(); ++i) {
    a.context = g.add(a.context, g.matmul(memory.states[i],
                                          g.select_row(a.weights, static_cast<int>(i))));
  }
  return a;
}

Var da_representation(Graph& g, Var act_embedding, Var context) {
  return g.concat({act_embedding, context});
}

}  // namespace ralstm
