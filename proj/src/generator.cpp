#include "ralstm/generator.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

namespace ralstm {

std::vector<std::string> BeamConfig::problems() const {
  std::vector<std::string> p;
  if (beam_width < 1) p.push_back("beam width must be >= 1");
  if (overgen < 1) p.push_back("overgen count must be >= 1");
  if (top_k < 1) p.push_back("top-k must be >= 1");
  if (top_k > overgen) p.push_back("top-k must not exceed the overgen count");
  if (max_length < 1) p.push_back("max length must be >= 1");
  if (!(lambda >= 0.0)) p.push_back("lambda must be >= 0");
  return p;
}

namespace {

struct Hyp {
  std::vector<int> ids;
  DecoderState state;
  double cost = 0.0;
  int last = Vocab::kBos;
};

struct Extension {
  double cost;
  std::size_t hyp;
  int token;
};

bool cost_order(const Candidate& a, const Candidate& b) {
  return std::tie(a.cost, a.ids) < std::tie(b.cost, b.ids);
}

Candidate finish(const Model& model, std::vector<int> ids, double cost, bool terminated) {
  Candidate c;
  c.ids = std::move(ids);
  for (int id : c.ids) c.tokens.push_back(model.vocab().token(id));
  c.terminated = terminated;
  c.cost = cost;
  return c;
}

}  // namespace

std::vector<Candidate> beam_search(const Model& model, const DialogueAct& da,
                                   const BeamConfig& config) {
  if (auto p = config.problems(); !p.empty()) throw ConfigError(p);
  const DecoderSession session(model, da);
  const int vocab = model.vocab().size();

  std::vector<Hyp> alive{Hyp{{}, session.initial_state(), 0.0, Vocab::kBos}};
  std::vector<Candidate> finished;

  for (int len = 1; len <= config.max_length && !alive.empty(); ++len) {
    std::vector<DecoderSession::Step> steps;
    std::vector<Extension> ext;
    for (std::size_t h = 0; h < alive.size(); ++h) {
      steps.push_back(session.step(alive[h].state, alive[h].last));
      const Vector& lp = steps.back().log_probs;
      for (int t = 0; t < vocab; ++t)
        if (is_generatable(t)) ext.push_back({alive[h].cost - lp(t), h, t});
    }
    const std::size_t keep = std::min(ext.size(), static_cast<std::size_t>(config.beam_width));
    std::partial_sort(ext.begin(), ext.begin() + static_cast<long>(keep), ext.end(),
                      [](const Extension& a, const Extension& b) {
                        return std::tie(a.cost, a.hyp, a.token) <
                               std::tie(b.cost, b.hyp, b.token);
                      });

    std::vector<Hyp> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Extension& e = ext[k];
      const Hyp& parent = alive[e.hyp];
      if (e.token == Vocab::kEos) {
        finished.push_back(finish(model, parent.ids, e.cost, true));
        continue;
      }
      Hyp h{parent.ids, steps[e.hyp].state, e.cost, e.token};
      h.ids.push_back(e.token);
      if (len == config.max_length)
        finished.push_back(finish(model, h.ids, h.cost, false));
      else
        next.push_back(std::move(h));
    }
    alive = std::move(next);

    if (static_cast<int>(finished.size()) >= config.overgen && !alive.empty()) {
      std::sort(finished.begin(), finished.end(), cost_order);
      finished.resize(config.overgen);
      double best_alive = alive.front().cost;
      for (const auto& h : alive) best_alive = std::min(best_alive, h.cost);
      // Costs only grow with length, so no live hypothesis can displace a
      // kept candidate.
      if (best_alive >= finished.back().cost) break;
    }
  }

  std::sort(finished.begin(), finished.end(), cost_order);
  if (static_cast<int>(finished.size()) > config.overgen) finished.resize(config.overgen);
  return finished;
}

void score_candidates(std::vector<Candidate>& candidates, const DialogueAct& da,
                      const DomainSchema& schema, double lambda) {
  for (auto& c : candidates) {
    c.err = slot_err(c.tokens, da, schema);
    c.score = c.cost + lambda * c.err.err;
  }
}

std::vector<Candidate> rerank(std::vector<Candidate> candidates, int top_k) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return std::tie(a.score, a.cost, a.tokens) <
                            std::tie(b.score, b.cost, b.tokens);
                   });
  if (top_k > 0 && static_cast<int>(candidates.size()) > top_k) candidates.resize(top_k);
  return candidates;
}

Tensor s_trace(const Model& model, const DialogueAct& da, const Candidate& c) {
  const DecoderSession session(model, da);
  std::vector<int> inputs{Vocab::kBos};
  inputs.insert(inputs.end(), c.ids.begin(), c.ids.end());
  if (!c.terminated) inputs.pop_back();
  Tensor trace(static_cast<Eigen::Index>(inputs.size()), model.feature_size());
  DecoderState state = session.initial_state();
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    state = session.step(state, inputs[t]).state;
    trace.row(static_cast<Eigen::Index>(t)) = state.s.transpose();
  }
  return trace;
}

void write_s_trace(std::ostream& out, const Model& model, const Candidate& c,
                   const Tensor& trace) {
  out << "step\ttoken";
  for (const auto& name : model.schema().feature_names()) out << '\t' << name;
  out << '\n';
  char buf[64];
  for (Eigen::Index t = 0; t < trace.rows(); ++t) {
    const std::size_t i = static_cast<std::size_t>(t);
    out << t + 1 << '\t' << (i < c.tokens.size() ? c.tokens[i] : std::string("</s>"));
    for (Eigen::Index k = 0; k < trace.cols(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.6f", trace(t, k));
      out << '\t' << buf;
    }
    out << '\n';
  }
}

GenerationResult generate(const Model& model, const DialogueAct& da,
                          const BeamConfig& config) {
  GenerationResult r;
  r.da = da;
  r.candidates = beam_search(model, da, config);
  score_candidates(r.candidates, da, model.schema(), config.lambda);
  r.candidates = rerank(std::move(r.candidates), 0);
  const int k = std::min<int>(config.top_k, static_cast<int>(r.candidates.size()));
  for (int i = 0; i < k; ++i) {
    Realization real;
    real.candidate = r.candidates[i];
    real.text = lexicalize(real.candidate.tokens, da, &model.schema(), &real.unfilled);
    r.top.push_back(std::move(real));
  }
  if (!r.candidates.empty()) r.trace = s_trace(model, da, r.candidates.front());
  return r;
}

GenerationResult generate(const Model& model, std::string_view da_text,
                          const BeamConfig& config) {
  return generate(model, parse_da(da_text), config);
}

EvalReport evaluate(const Model& model, const std::vector<Example>& examples,
                    const BeamConfig& config, const std::string& label) {
  if (examples.empty()) throw DataError("evaluate: no examples");
  std::vector<std::string> order;
  std::map<std::string, std::vector<const Example*>> groups;
  for (const auto& e : examples) {
    const std::string key = render_da(e.da);
    auto [it, fresh] = groups.try_emplace(key);
    if (fresh) order.push_back(key);
    it->second.push_back(&e);
  }

  BeamConfig top1 = config;
  top1.top_k = 1;
  EvalReport report;
  report.label = label;
  std::vector<Tokens> hyps;
  std::vector<std::vector<Tokens>> refs;
  std::vector<SlotErr> errs;
  for (const auto& key : order) {
    const auto& group = groups.at(key);
    const DialogueAct& da = group.front()->da;
    GenerationResult g = generate(model, da, top1);
    EvalRow row;
    row.da = key;
    if (!g.top.empty()) {
      row.hypothesis = g.top.front().text;
      row.err = g.top.front().candidate.err;
    } else {
      row.err = slot_err({}, da, model.schema());
    }
    hyps.push_back(tokenize(row.hypothesis));
    std::vector<Tokens> group_refs;
    for (const Example* e : group) group_refs.push_back(tokenize(e->reference));
    refs.push_back(std::move(group_refs));
    errs.push_back(row.err);
    report.rows.push_back(std::move(row));
  }
  report.bleu = corpus_bleu(hyps, refs);
  report.err = corpus_err(errs);
  return report;
}

}  // namespace ralstm
