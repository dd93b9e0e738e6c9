#pragma once

// Slot-value encoder and attention aligner.
//
// Dimension plan for hidden size n: slot and value embeddings have n/2
// entries each, so a pair embedding z_i = u_i (+) v_i has n; the act
// embedding has n, so the attentive DA vector d_t = a (+) context has 2n.

#include <vector>

#include "ralstm/autodiff.hpp"
#include "ralstm/corpus.hpp"

namespace ralstm {

struct EncoderParams {
  Var slot_embed;   // slots x n/2
  Var value_embed;  // values x n/2
  Var act_embed;    // acts x n
  Var fwd_w;        // 4n x 2n, rows ordered (i, f, o, candidate)
  Var fwd_b;        // 4n x 1
  Var bwd_w;
  Var bwd_b;
  Var att_w;        // n x n
  Var att_u;        // n x n
  Var att_v;        // 1 x n
};

struct PairIds {
  int slot = Vocab::kEncNull;
  int value = Vocab::kEncNull;
};

// Embedding-table rows for the pairs of `da` in their given order. A DA with
// no pairs yields one null pair so the encoder always sees L >= 1.
// `unknown` counts slot or value lookups that fell back to the UNK row.
std::vector<PairIds> pair_ids(const DialogueAct& da, const Vocab& vocab,
                              const DomainSchema* schema, int* unknown = nullptr);

// z_i = slot_embed[slot_i] (+) value_embed[value_i]
std::vector<Var> embed_pairs(Graph& g, const EncoderParams& p,
                             const std::vector<PairIds>& ids);

struct LstmGates {
  Var input, forget, output, candidate;
};

// pre = W * in + b split into sigmoid(i, f, o) and tanh(candidate) blocks.
LstmGates lstm_gates(Graph& g, Var w, Var b, Var in, int hidden);

// Standard LSTM step over a pre-concatenated input [x; h_prev]:
// gates = W * in + b, c = f.c_prev + i.candidate, h = o.tanh(c).
struct LstmCellOut {
  Var h, c;
  LstmGates gates;
};
LstmCellOut lstm_cell(Graph& g, Var w, Var b, Var in, Var c_prev, int hidden);

struct EncodedSequence {
  std::vector<Var> states;    // e_i = forward_i + backward_i
  std::vector<Var> forward;
  std::vector<Var> backward;
};

// Requires at least one input.
EncodedSequence bilstm_encode(Graph& g, const EncoderParams& p,
                              const std::vector<Var>& z, int hidden);

// Encoder states with their step-invariant projections W_a e_i.
struct AttentionMemory {
  std::vector<Var> states;
  std::vector<Var> projected;
};

AttentionMemory make_attention_memory(Graph& g, const EncoderParams& p,
                                      const std::vector<Var>& states);

struct Attention {
  Var weights;  // L x 1, softmax of alignment scores
  Var context;  // n x 1, sum_i weights_i * e_i
  Var scores;   // L x 1, v_a^T tanh(W_a e_i + U_a h_prev)
};

Attention attend(Graph& g, const EncoderParams& p, const AttentionMemory& memory,
                 Var h_prev);

// d_t = act_embedding (+) context
Var da_representation(Graph& g, Var act_embedding, Var context);

}  // namespace ralstm
