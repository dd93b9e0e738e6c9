#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ralstm/dataset.hpp"
#include "ralstm/metrics.hpp"
#include "ralstm/model.hpp"

namespace ralstm {

struct BeamConfig {
  int beam_width = 10;
  int overgen = 20;
  int top_k = 5;
  double lambda = 1000.0;
  int max_length = 80;

  // Empty when valid.
  std::vector<std::string> problems() const;
};

struct Candidate {
  std::vector<int> ids;       // emitted tokens, EOS excluded
  Tokens tokens;              // delexicalized surface tokens of `ids`
  bool terminated = false;    // false when truncated at max_length
  double cost = 0.0;          // F: summed -log p, EOS included when terminated
  SlotErr err;
  double score = 0.0;         // R = F + lambda * err
};

// Candidates sorted by ascending cost (ties by token ids), at most
// config.overgen of them. Expansion never proposes PAD, BOS or UNK. Stops
// once `overgen` finished candidates are held and no live hypothesis can
// beat the worst of them.
std::vector<Candidate> beam_search(const Model& model, const DialogueAct& da,
                                   const BeamConfig& config);

void score_candidates(std::vector<Candidate>& candidates, const DialogueAct& da,
                      const DomainSchema& schema, double lambda);

// Ascending R, then F, then lexicographic tokens. Keeps the first top_k
// (all when top_k <= 0).
std::vector<Candidate> rerank(std::vector<Candidate> candidates, int top_k);

// Rows are steps (one per emitted token, EOS included when terminated);
// columns are DA feature components. Row t is s after consuming input t.
Tensor s_trace(const Model& model, const DialogueAct& da, const Candidate& c);
void write_s_trace(std::ostream& out, const Model& model, const Candidate& c,
                   const Tensor& trace);

struct Realization {
  std::string text;
  Candidate candidate;
  int unfilled = 0;  // slot tokens left without a value
};

struct GenerationResult {
  DialogueAct da;
  std::vector<Candidate> candidates;  // every candidate, reranked
  std::vector<Realization> top;       // first top_k, lexicalized
  Tensor trace;                       // s-trace of the top candidate
};

GenerationResult generate(const Model& model, const DialogueAct& da,
                          const BeamConfig& config);
GenerationResult generate(const Model& model, std::string_view da_text,
                          const BeamConfig& config);

// Groups examples by DA (first appearance order), generates the top-1
// realization per DA and scores it against all references of that DA.
EvalReport evaluate(const Model& model, const std::vector<Example>& examples,
                    const BeamConfig& config, const std::string& label = "");

}  // namespace ralstm
