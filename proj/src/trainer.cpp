#include "ralstm/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

namespace ralstm {

std::string to_string(L2Mode m) {
  return m == L2Mode::kEveryNth ? "every-nth" : "accumulated";
}

L2Mode parse_l2_mode(const std::string& s) {
  if (s == "every-nth") return L2Mode::kEveryNth;
  if (s == "accumulated") return L2Mode::kAccumulated;
  throw ConfigError({"unknown l2 mode '" + s + "' (expected every-nth or accumulated)"});
}

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> p;
  if (hidden < 2 || hidden % 2 != 0) p.push_back("hidden must be an even number >= 2");
  if (!(learning_rate > 0.0)) p.push_back("learning rate must be > 0");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) p.push_back("lr decay must be in (0, 1]");
  if (!(l2 >= 0.0)) p.push_back("l2 must be >= 0");
  if (l2_cadence < 1) p.push_back("l2 cadence must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) p.push_back("dropout must be in [0, 1)");
  if (max_epochs < 1) p.push_back("max epochs must be >= 1");
  if (patience < 1) p.push_back("patience must be >= 1");
  if (!(grad_clip >= 0.0)) p.push_back("gradient clip must be >= 0");
  if (!(init_scale > 0.0)) p.push_back("init scale must be > 0");
  if (validation_beam < 1) p.push_back("validation beam must be >= 1");
  return p;
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience), best_(0.0) {
  if (patience < 1) throw ConfigError({"patience must be >= 1"});
}

bool EarlyStopping::update(double loss) {
  if (!seen_ || loss < best_) {
    seen_ = true;
    best_ = loss;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

std::vector<PreparedExample> prepare(const Model& model,
                                     const std::vector<Example>& examples) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    auto d = delexicalize(e.reference, e.da, &model.schema());
    out.push_back({e.da, model.vocab().encode(d.tokens)});
  }
  return out;
}

Vocab build_vocab(const DomainSchema& schema, const std::vector<Example>& train) {
  std::vector<std::vector<std::string>> sentences;
  std::vector<DialogueAct> das;
  for (const auto& e : train) {
    sentences.push_back(delexicalize(e.reference, e.da, &schema).tokens);
    das.push_back(e.da);
  }
  return Vocab::build(schema, sentences, das);
}

Model create_model(const DomainSchema& schema, const CorpusSplits& splits,
                   const TrainConfig& config) {
  Model m(schema, build_vocab(schema, splits.train), config.hidden, config.variant);
  m.initialize(config.seed, config.init_scale);
  return m;
}

double mean_loss(const Model& model, const std::vector<PreparedExample>& data) {
  double total = 0.0;
  long steps = 0;
  for (const auto& ex : data) {
    Graph g;
    BoundModel b = bind(g, model);
    auto sl = sequence_loss(g, b, model, ex.da, ex.ids);
    total += g.scalar(sl.loss);
    steps += sl.steps;
  }
  return steps == 0 ? 0.0 : total / static_cast<double>(steps);
}

namespace {

std::vector<Tensor> snapshot(const ParameterSet& ps) {
  std::vector<Tensor> out;
  for (const auto& p : ps) out.push_back(p.value);
  return out;
}

void restore(ParameterSet& ps, const std::vector<Tensor>& values) {
  std::size_t i = 0;
  for (auto& p : ps) {
    p.value = values[i++];
    p.grad.setZero();
  }
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
}

}  // namespace

TrainReport train(Model& model, const CorpusSplits& splits, const TrainConfig& config,
                  const TrainHooks& hooks) {
  if (auto p = config.problems(); !p.empty()) throw ConfigError(p);
  if (splits.train.empty()) throw DataError("training split is empty");
  if (splits.validation.empty()) throw DataError("validation split is empty");
  model.set_variant(config.variant);

  const auto train_data = prepare(model, splits.train);
  const auto val_data = prepare(model, splits.validation);
  BeamConfig val_beam;
  val_beam.beam_width = config.validation_beam;
  val_beam.overgen = config.validation_beam;
  val_beam.top_k = 1;

  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  DropoutSpec dropout{config.dropout, &dropout_rng};

  ParameterSet& params = model.params();
  for (auto& p : params) p.grad.setZero();
  std::vector<Tensor> best = snapshot(params);
  bool have_best = false;

  TrainReport report;
  report.checkpoint_path = hooks.checkpoint_path;
  EarlyStopping stopper(config.patience);
  double lr = config.learning_rate;
  long seen = 0;
  std::vector<std::size_t> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto diverge = [&](const std::string& why) {
    restore(params, best);
    if (!hooks.checkpoint_path.empty()) model.save(hooks.checkpoint_path);
    throw NumericError("training diverged: " + why +
                       (hooks.checkpoint_path.empty()
                            ? std::string()
                            : "; last good model kept at " + hooks.checkpoint_path));
  };

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.shuffle) shuffle(order, order_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    double total = 0.0;
    long steps = 0;
    for (std::size_t idx : order) {
      const auto& ex = train_data[idx];
      Graph g;
      BoundModel b = bind(g, model);
      auto sl = sequence_loss(g, b, model, ex.da, ex.ids, dropout);
      const double loss = g.scalar(sl.loss);
      if (!std::isfinite(loss)) diverge("non-finite loss at epoch " + std::to_string(epoch));
      rec.clamped_logs += g.clamped_logs();
      total += loss;
      steps += sl.steps;
      g.backward(sl.loss);
      ++seen;

      bool update = true;
      bool l2 = seen % config.l2_cadence == 0;
      if (config.l2_mode == L2Mode::kAccumulated) update = l2;
      if (!update) continue;
      clip_gradients(params, config.grad_clip);
      try {
        sgd_step(params, lr, config.l2, l2);
      } catch (const NumericError& e) {
        diverge(e.what());
      }
      ++report.updates;
      if (l2) ++report.l2_updates;
      if (hooks.on_update) hooks.on_update(report.updates, l2);
    }
    rec.train_loss = total / static_cast<double>(std::max(1L, steps));
    rec.validation_loss = mean_loss(model, val_data);
    if (!std::isfinite(rec.validation_loss))
      diverge("non-finite validation loss at epoch " + std::to_string(epoch));
    rec.validation_bleu = evaluate(model, splits.validation, val_beam).bleu.bleu;

    if (!have_best || rec.validation_bleu > report.best_validation_bleu) {
      have_best = true;
      best = snapshot(params);
      report.best_epoch = epoch;
      report.best_validation_bleu = rec.validation_bleu;
    }
    const bool improved = stopper.update(rec.validation_loss);
    if (!improved) lr *= config.lr_decay;
    report.epochs.push_back(rec);
    report.stopped_epoch = epoch;
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (stopper.should_stop()) break;
  }

  restore(params, best);
  if (!hooks.checkpoint_path.empty()) model.save(hooks.checkpoint_path);
  return report;
}

void write_train_log(std::ostream& out, const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch},
                   {"train_loss", r.train_loss},
                   {"validation_loss", r.validation_loss},
                   {"validation_bleu", r.validation_bleu},
                   {"learning_rate", r.learning_rate},
                   {"clamped_logs", r.clamped_logs}};
  out << j.dump() << '\n';
}

MultiSeedReport run_multi_seed(const DomainSchema& schema, const CorpusSplits& splits,
                               const TrainConfig& config, int k,
                               const BeamConfig& test_beam, const std::string& run_dir,
                               const std::function<void(const std::string&)>& log) {
  if (k < 1) throw ConfigError({"number of runs must be >= 1"});
  const auto& test = splits.test.empty() ? splits.validation : splits.test;
  MultiSeedReport out;
  for (int i = 0; i < k; ++i) {
    TrainConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(i);
    SeedRun run;
    run.seed = c.seed;
    TrainHooks hooks;
    if (!run_dir.empty()) {
      const auto dir = std::filesystem::path(run_dir) / ("seed-" + std::to_string(c.seed));
      std::filesystem::create_directories(dir);
      run.checkpoint_path = (dir / "model.ckpt").string();
      hooks.checkpoint_path = run.checkpoint_path;
    }
    Model model = create_model(schema, splits, c);
    run.report = train(model, splits, c, hooks);
    run.test = evaluate(model, test, test_beam, "seed-" + std::to_string(c.seed));
    if (log)
      log("seed " + std::to_string(c.seed) + ": best epoch " +
          std::to_string(run.report.best_epoch) + ", test BLEU " +
          std::to_string(run.test.bleu.bleu));
    out.runs.push_back(std::move(run));
  }
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    const auto& r = out.runs[i];
    if (r.report.best_validation_bleu >
        out.runs[out.selected].report.best_validation_bleu)
      out.selected = static_cast<int>(i);
    out.mean_test_bleu += r.test.bleu.bleu / k;
    out.mean_test_err += r.test.err.corpus / k;
    out.mean_test_err_mean += r.test.err.mean / k;
    out.max_test_bleu = i == 0 ? r.test.bleu.bleu : std::max(out.max_test_bleu, r.test.bleu.bleu);
  }
  return out;
}

namespace {
std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

void write_multi_seed_report(std::ostream& out, const MultiSeedReport& r) {
  out << "run\tseed\tbest_epoch\tvalidation_bleu\ttest_bleu\ttest_err\ttest_err_mean\tcheckpoint\n";
  for (std::size_t i = 0; i < r.runs.size(); ++i) {
    const auto& s = r.runs[i];
    out << i << '\t' << s.seed << '\t' << s.report.best_epoch << '\t'
        << g17(s.report.best_validation_bleu) << '\t' << g17(s.test.bleu.bleu) << '\t'
        << g17(s.test.err.corpus) << '\t' << g17(s.test.err.mean) << '\t'
        << s.checkpoint_path << '\n';
  }
  out << "selected\t" << r.selected << '\n';
  out << "mean\t\t\t\t" << g17(r.mean_test_bleu) << '\t' << g17(r.mean_test_err) << '\t'
      << g17(r.mean_test_err_mean) << "\t\n";
  out << "max\t\t\t\t" << g17(r.max_test_bleu) << "\t\t\t\n";
}

std::pair<std::vector<double>, int> read_multi_seed_selection(std::istream& in) {
  std::vector<double> bleu;
  int selected = -1;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string first;
    std::getline(ls, first, '\t');
    if (first == "selected") {
      ls >> selected;
    } else if (!first.empty() && std::isdigit(static_cast<unsigned char>(first[0]))) {
      std::string field;
      for (int i = 0; i < 3; ++i) std::getline(ls, field, '\t');
      bleu.push_back(std::stod(field));
    }
  }
  if (selected < 0) throw DataError("report has no selected row");
  return {bleu, selected};
}

}  // namespace ralstm
