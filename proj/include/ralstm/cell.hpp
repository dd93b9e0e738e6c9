#pragma once

// The RALSTM decoder step: refinement gate, DA-conditioned LSTM with the
// extra tanh(W_cr r_t) cell term, adjustment gate over the DA feature vector
// s, combined output and token logits.

#include <string>

#include "ralstm/autodiff.hpp"
#include "ralstm/encoder.hpp"

namespace ralstm {

enum class CellVariant {
  kFull,
  kWithoutRefinement,  // x_t = embedding, no tanh(W_cr r_t) term
  kWithoutAdjustment,  // h_t = h~_t, s is carried unchanged
};

std::string to_string(CellVariant v);  // "full", "wo-r", "wo-a"
// Accepts full | wo-r | wo-a | without-refinement | without-adjustment.
CellVariant parse_variant(const std::string& s);

struct DecoderParams {
  Var embed;  // vocab x n
  Var w_rd;   // n x 2n
  Var w_rh;   // n x n
  Var w;      // 4n x 4n over [x; d; h_prev], rows ordered (i, f, o, candidate)
  Var b;      // 4n x 1
  Var w_cr;   // n x n
  Var w_ax;   // |s| x n
  Var w_ah;   // |s| x n
  Var w_os;   // n x |s|
  Var w_ho;   // vocab x n
};

struct Refined {
  Var x;  // r . w_embed
  Var r;  // sigma(W_rd d + W_rh h_prev)
};
Refined refine(Graph& g, const DecoderParams& p, Var w_embed, Var d, Var h_prev);

struct LstmStep {
  Var h_tilde;
  Var c;
  Var o;
};
// An invalid `r` drops the tanh(W_cr r) cell term.
LstmStep lstm_step(Graph& g, const DecoderParams& p, Var x, Var d, Var h_prev,
                   Var c_prev, Var r, int hidden);

struct Adjusted {
  Var s;    // s_prev . a
  Var h_a;  // o . tanh(sigma(W_os s))
  Var a;    // sigma(W_ax x + W_ah h~)
};
Adjusted adjust(Graph& g, const DecoderParams& p, Var x, Var h_tilde, Var s_prev,
                Var o);

struct StepVars {
  Var h, c, s;
};

// Inverted-dropout masks (entries 0 or 1/(1-rate)); invalid means none.
struct StepDropout {
  Var embed_mask;
  Var output_mask;
};

struct DecoderStepOut {
  StepVars state;
  Var logits;
  Attention attention;
  Var r;  // invalid for kWithoutRefinement
  Var a;  // invalid for kWithoutAdjustment
};

DecoderStepOut decoder_step(Graph& g, const EncoderParams& enc,
                            const DecoderParams& dec,
                            const AttentionMemory& memory, Var act_embedding,
                            const StepVars& prev, int token, CellVariant variant,
                            int hidden, const StepDropout& dropout = {});

}  // namespace ralstm
