#include "ralstm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <ostream>

namespace ralstm {

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts counts;
  if (t.size() < n) return counts;
  for (std::size_t i = 0; i + n <= t.size(); ++i)
    ++counts[std::vector<std::string>(t.begin() + static_cast<long>(i),
                                      t.begin() + static_cast<long>(i + n))];
  return counts;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

}  // namespace

BleuResult corpus_bleu(const std::vector<Tokens>& hypotheses,
                       const std::vector<std::vector<Tokens>>& references) {
  if (hypotheses.empty()) throw DataError("corpus_bleu: empty hypothesis set");
  if (hypotheses.size() != references.size())
    throw DataError("corpus_bleu: hypothesis and reference counts differ");

  BleuResult r;
  for (std::size_t k = 0; k < hypotheses.size(); ++k) {
    const Tokens& hyp = hypotheses[k];
    const auto& refs = references[k];
    if (refs.empty()) throw DataError("corpus_bleu: empty reference group");

    r.hypothesis_length += static_cast<long>(hyp.size());
    long best = -1;
    for (const auto& ref : refs) {
      const long len = static_cast<long>(ref.size());
      const long diff = std::labs(len - static_cast<long>(hyp.size()));
      const long best_diff = std::labs(best - static_cast<long>(hyp.size()));
      if (best < 0 || diff < best_diff || (diff == best_diff && len < best)) best = len;
    }
    r.reference_length += best;

    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts h = ngrams(hyp, n);
      NgramCounts max_ref;
      for (const auto& ref : refs)
        for (const auto& [g, c] : ngrams(ref, n)) max_ref[g] = std::max(max_ref[g], c);
      for (const auto& [g, c] : h) {
        r.totals[n - 1] += c;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) r.matches[n - 1] += std::min(c, it->second);
      }
    }
  }

  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (r.totals[n] == 0) {
      r.precision[n] = 1.0;
    } else if (r.matches[n] == 0) {
      r.precision[n] = kBleuEpsilon / static_cast<double>(r.totals[n]);
    } else {
      r.precision[n] = static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    }
    log_sum += 0.25 * std::log(r.precision[n]);
  }
  if (r.hypothesis_length == 0) {
    r.brevity_penalty = 0.0;
    r.bleu = 0.0;
    return r;
  }
  r.brevity_penalty =
      r.hypothesis_length > r.reference_length
          ? 1.0
          : std::exp(1.0 - static_cast<double>(r.reference_length) /
                               static_cast<double>(r.hypothesis_length));
  r.bleu = r.brevity_penalty * std::exp(log_sum);
  return r;
}

SlotErr slot_err(const Tokens& tokens, const DialogueAct& da,
                 const DomainSchema& schema) {
  std::map<std::string, int> required;
  SlotErr e;
  for (const auto& p : da.pairs) {
    if (!is_delexicalized_pair(p, &schema)) continue;
    ++required[p.slot];
    ++e.total;
  }
  std::map<std::string, int> emitted;
  for (const auto& t : tokens)
    if (is_slot_token(t)) ++emitted[slot_of_token(t)];
  for (const auto& [slot, need] : required) {
    const int got = emitted.count(slot) ? emitted[slot] : 0;
    e.missing += std::max(0, need - got);
  }
  for (const auto& [slot, got] : emitted) {
    const int need = required.count(slot) ? required[slot] : 0;
    e.redundant += std::max(0, got - need);
  }
  e.err = e.total == 0 ? 0.0
                       : static_cast<double>(e.missing + e.redundant) / e.total;
  return e;
}

ErrAggregate corpus_err(const std::vector<SlotErr>& errs) {
  ErrAggregate a;
  double sum = 0.0;
  for (const auto& e : errs) {
    a.missing += e.missing;
    a.redundant += e.redundant;
    a.total += e.total;
    if (e.total > 0) {
      sum += e.err;
      ++a.counted;
    }
  }
  a.corpus = a.total == 0 ? 0.0
                          : static_cast<double>(a.missing + a.redundant) / a.total;
  a.mean = a.counted == 0 ? 0.0 : sum / a.counted;
  return a;
}

ErrAggregate corpus_err(const std::vector<Tokens>& generated,
                        const std::vector<DialogueAct>& das,
                        const DomainSchema& schema) {
  if (generated.size() != das.size())
    throw DataError("corpus_err: generated and DA counts differ");
  std::vector<SlotErr> errs;
  for (std::size_t i = 0; i < das.size(); ++i)
    errs.push_back(slot_err(generated[i], das[i], schema));
  return corpus_err(errs);
}

void write_eval_table(std::ostream& out, const std::vector<EvalReport>& reports,
                      bool mean_row) {
  out << "model/domain            BLEU      ERR(corpus)  ERR(mean)\n";
  double b = 0, ec = 0, em = 0;
  auto line = [&](const std::string& label, double bleu, double c, double m) {
    std::string l = label;
    if (l.size() < 22) l.resize(22, ' ');
    out << l << "  " << fmt(bleu) << "    " << fmt(100.0 * c, 2) << "%        "
        << fmt(100.0 * m, 2) << "%\n";
  };
  for (const auto& r : reports) {
    line(r.label, r.bleu.bleu, r.err.corpus, r.err.mean);
    b += r.bleu.bleu;
    ec += r.err.corpus;
    em += r.err.mean;
  }
  if (mean_row && !reports.empty()) {
    const double k = static_cast<double>(reports.size());
    line("mean", b / k, ec / k, em / k);
  }
}

void write_eval_tsv(std::ostream& out, const std::vector<EvalReport>& reports,
                    bool mean_row) {
  out << "label\tbleu\terr_corpus\terr_mean\tp1\tp2\tp3\tp4\tbp\n";
  auto g = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
  };
  double b = 0, ec = 0, em = 0;
  for (const auto& r : reports) {
    out << r.label << '\t' << g(r.bleu.bleu) << '\t' << g(r.err.corpus) << '\t'
        << g(r.err.mean);
    for (double p : r.bleu.precision) out << '\t' << g(p);
    out << '\t' << g(r.bleu.brevity_penalty) << '\n';
    b += r.bleu.bleu;
    ec += r.err.corpus;
    em += r.err.mean;
  }
  if (mean_row && !reports.empty()) {
    const double k = static_cast<double>(reports.size());
    out << "mean\t" << g(b / k) << '\t' << g(ec / k) << '\t' << g(em / k)
        << "\t\t\t\t\t\n";
  }
}

}  // namespace ralstm
