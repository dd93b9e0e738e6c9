#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "ralstm/corpus.hpp"

namespace ralstm {

using Tokens = std::vector<std::string>;

struct BleuResult {
  double bleu = 0.0;
  std::array<double, 4> precision{};
  std::array<long, 4> matches{};
  std::array<long, 4> totals{};
  long hypothesis_length = 0;
  long reference_length = 0;
  double brevity_penalty = 0.0;
};

inline constexpr double kBleuEpsilon = 1e-9;

// Corpus BLEU-4 with clipped counts over multiple references and the
// closest-reference-length brevity penalty. An order with zero matches gets
// precision eps/total; an order with no hypothesis n-grams at all is left
// out (precision 1). Inputs are compared as given: callers tokenize and
// lowercase (see tokenize()).
BleuResult corpus_bleu(const std::vector<Tokens>& hypotheses,
                       const std::vector<std::vector<Tokens>>& references);

struct SlotErr {
  double err = 0.0;
  int missing = 0;    // p
  int redundant = 0;  // q
  int total = 0;      // N
};

// ERR = (p + q) / N over slot tokens of delexicalized output. N counts the
// DA's delexicalized pairs with multiplicity; required count per slot is its
// multiplicity. N = 0 gives err = 0.
SlotErr slot_err(const Tokens& tokens, const DialogueAct& da,
                 const DomainSchema& schema);

struct ErrAggregate {
  double corpus = 0.0;  // (sum p + sum q) / sum N
  double mean = 0.0;    // mean per-DA err over DAs with N > 0
  long missing = 0;
  long redundant = 0;
  long total = 0;
  int counted = 0;      // DAs with N > 0
};

ErrAggregate corpus_err(const std::vector<SlotErr>& errs);
ErrAggregate corpus_err(const std::vector<Tokens>& generated,
                        const std::vector<DialogueAct>& das,
                        const DomainSchema& schema);

struct EvalRow {
  std::string da;
  std::string hypothesis;
  SlotErr err;
};

struct EvalReport {
  std::string label;
  BleuResult bleu;
  ErrAggregate err;
  std::vector<EvalRow> rows;
};

// Human-readable table: one line per report plus an optional mean row.
void write_eval_table(std::ostream& out, const std::vector<EvalReport>& reports,
                      bool mean_row);
// Tab-separated: label, bleu, err_corpus, err_mean, p1..p4, bp.
void write_eval_tsv(std::ostream& out, const std::vector<EvalReport>& reports,
                    bool mean_row);

}  // namespace ralstm
