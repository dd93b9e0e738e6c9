#include "ralstm/cell.hpp"

namespace ralstm {

std::string to_string(CellVariant v) {
  switch (v) {
    case CellVariant::kFull: return "full";
    case CellVariant::kWithoutRefinement: return "wo-r";
    case CellVariant::kWithoutAdjustment: return "wo-a";
  }
  return "full";
}

CellVariant parse_variant(const std::string& s) {
  if (s == "full") return CellVariant::kFull;
  if (s == "wo-r" || s == "without-refinement") return CellVariant::kWithoutRefinement;
  if (s == "wo-a" || s == "without-adjustment") return CellVariant::kWithoutAdjustment;
  throw ConfigError({"unknown variant '" + s + "' (expected full, wo-r or wo-a)"});
}

Refined refine(Graph& g, const DecoderParams& p, Var w_embed, Var d, Var h_prev) {
  Var r = g.sigmoid(g.add(g.matmul(p.w_rd, d), g.matmul(p.w_rh, h_prev)));
  return {g.cmul(r, w_embed), r};
}

LstmStep lstm_step(Graph& g, const DecoderParams& p, Var x, Var d, Var h_prev,
                   Var c_prev, Var r, int hidden) {
  LstmGates gates = lstm_gates(g, p.w, p.b, g.concat({x, d, h_prev}), hidden);
  Var c = g.add(g.cmul(gates.forget, c_prev), g.cmul(gates.input, gates.candidate));
  if (r.valid()) c = g.add(c, g.tanh(g.matmul(p.w_cr, r)));
  Var h_tilde = g.cmul(gates.output, g.tanh(c));
  return {h_tilde, c, gates.output};
}

Adjusted adjust(Graph& g, const DecoderParams& p, Var x, Var h_tilde, Var s_prev,
                Var o) {
  Var a = g.sigmoid(g.add(g.matmul(p.w_ax, x), g.matmul(p.w_ah, h_tilde)));
  Var s = g.cmul(s_prev, a);
  Var c_a = g.sigmoid(g.matmul(p.w_os, s));
  return {s, g.cmul(o, g.tanh(c_a)), a};
}

DecoderStepOut decoder_step(Graph& g, const EncoderParams& enc,
                            const DecoderParams& dec,
                            const AttentionMemory& memory, Var act_embedding,
                            const StepVars& prev, int token, CellVariant variant,
                            int hidden, const StepDropout& dropout) {
  DecoderStepOut out;
  Var w = g.select_row(dec.embed, token);
  if (dropout.embed_mask.valid()) w = g.cmul(w, dropout.embed_mask);

  out.attention = attend(g, enc, memory, prev.h);
  Var d = da_representation(g, act_embedding, out.attention.context);

  Var x = w;
  if (variant != CellVariant::kWithoutRefinement) {
    auto refined = refine(g, dec, w, d, prev.h);
    x = refined.x;
    out.r = refined.r;
  }
  auto step = lstm_step(g, dec, x, d, prev.h, prev.c, out.r, hidden);

  Var h = step.h_tilde;
  Var s = prev.s;
  if (variant != CellVariant::kWithoutAdjustment) {
    auto adjusted = adjust(g, dec, x, step.h_tilde, prev.s, step.o);
    h = g.add(step.h_tilde, adjusted.h_a);
    s = adjusted.s;
    out.a = adjusted.a;
  }
  out.state = {h, step.c, s};

  Var h_out = dropout.output_mask.valid() ? g.cmul(h, dropout.output_mask) : h;
  out.logits = g.matmul(dec.w_ho, h_out);
  return out;
}

}  // namespace ralstm
