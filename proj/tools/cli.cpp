#include "cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ralstm/config.hpp"
#include "ralstm/dataset.hpp"
#include "ralstm/generator.hpp"
#include "ralstm/gradcheck.hpp"
#include "ralstm/metrics.hpp"
#include "ralstm/model.hpp"
#include "ralstm/trainer.hpp"

namespace fs = std::filesystem;

namespace ralstm::cli {

namespace {

class RunDirBusy : public Error {
 public:
  using Error::Error;
};

// Exclusive claim on a run directory for the lifetime of a command.
class RunDirLock {
 public:
  explicit RunDirLock(const std::string& dir) : path_((fs::path(dir) / ".lock").string()) {
    fs::create_directories(dir);
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
      throw RunDirBusy("run directory " + dir + " is in use (remove " + path_ +
                       " if no other run is active)");
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd, pid.data(), pid.size()) < 0) {
      // the pid is informational only
    }
    ::close(fd);
  }
  ~RunDirLock() { ::unlink(path_.c_str()); }
  RunDirLock(const RunDirLock&) = delete;
  RunDirLock& operator=(const RunDirLock&) = delete;

 private:
  std::string path_;
};

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string absolute(const std::string& p) {
  if (p.empty() || p == "-") return p;
  return fs::absolute(p).lexically_normal().string();
}

// Flags shared by commands that resolve a RunConfig.
struct ConfigFlags {
  std::string config;
  std::vector<std::string> sets;
  std::vector<std::string> data;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<int> hidden;
  std::optional<int> beam;
  std::optional<int> overgen;
  std::optional<int> top_k;
  std::optional<double> lambda;
  std::optional<double> dropout;
  std::optional<int> runs;
  std::optional<std::string> init_from;
  std::optional<std::string> embeddings;
  std::string run_dir;

  void add_common(CLI::App* app, const std::string& command) {
    app->add_option("--config", config, "key = value configuration file");
    app->add_option("--set", sets, "override one configuration key (key=value), repeatable");
    app->add_option("--run-dir", run_dir, "output directory (default runs/" + command + ")");
  }
  void add_data(CLI::App* app) {
    app->add_option("--data", data, "dataset directory, repeatable");
  }
  void add_beam(CLI::App* app) {
    app->add_option("--beam", beam, "beam width");
    app->add_option("--overgen", overgen, "candidates kept by beam search");
    app->add_option("--top-k", top_k, "realizations per DA");
    app->add_option("--lambda", lambda, "slot-error penalty weight");
  }
  void add_train(CLI::App* app) {
    app->add_option("--seed", seed, "random seed");
    app->add_option("--variant", variant, "full | wo-r | wo-a");
    app->add_option("--hidden", hidden, "hidden size");
    app->add_option("--dropout", dropout, "dropout rate");
    app->add_option("--runs", runs, "number of seeds");
    app->add_option("--init-from", init_from, "warm-start checkpoint");
    app->add_option("--embeddings", embeddings, "pretrained decoder embeddings");
  }

  RunConfig resolve() const {
    KeyValues file;
    if (!config.empty()) file = read_config_file(config);
    KeyValues over;
    std::vector<std::string> problems;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos || eq == 0)
        problems.push_back("--set expects key=value, got '" + s + "'");
      else
        over[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (!problems.empty()) throw ConfigError(problems);
    if (!data.empty()) {
      std::string joined;
      for (const auto& d : data) joined += (joined.empty() ? "" : ",") + d;
      over["data"] = joined;
    }
    if (seed) over["seed"] = std::to_string(*seed);
    if (variant) over["variant"] = *variant;
    if (hidden) over["hidden"] = std::to_string(*hidden);
    if (beam) over["beam"] = std::to_string(*beam);
    if (overgen) over["overgen"] = std::to_string(*overgen);
    if (top_k) over["top_k"] = std::to_string(*top_k);
    if (lambda) over["lambda"] = g17(*lambda);
    if (dropout) over["dropout"] = g17(*dropout);
    if (runs) over["runs"] = std::to_string(*runs);
    if (init_from) over["init_from"] = *init_from;
    if (embeddings) over["embeddings"] = *embeddings;
    RunConfig c = resolve_config(file, over);
    for (auto& d : c.data) d = absolute(d);
    c.init_from = absolute(c.init_from);
    c.embeddings = absolute(c.embeddings);
    return c;
  }

  std::string dir(const std::string& command) const {
    return run_dir.empty() ? (fs::path("runs") / command).string() : run_dir;
  }
};

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& args,
                           const RunConfig& c) {
  RunManifest m;
  m.command = command;
  m.command_line = {"ralstm"};
  m.command_line.insert(m.command_line.end(), args.begin(), args.end());
  m.config = to_key_values(c);
  m.seed = c.train.seed;
  m.timestamp = utc_timestamp();
  return m;
}

void finish_manifest(RunManifest& m, const std::string& dir, std::ostream& out) {
  const std::string path = (fs::path(dir) / "manifest.json").string();
  m.write(path);
  out << "manifest: " << path << "\n";
}

struct LoadedData {
  CorpusSplits splits;
  DomainSchema schema;
  std::vector<DatasetInfo> infos;
};

LoadedData load_data(const RunConfig& c) {
  if (c.data.empty()) throw ConfigError({"no dataset given (use --data DIR)"});
  LoadedData d;
  d.splits = load_datasets(c.data, c.split, &d.infos);
  bool inferred = false;
  bool first = true;
  for (const auto& info : d.infos) {
    if (!info.schema) {
      inferred = true;
      continue;
    }
    if (first)
      d.schema = *info.schema;
    else
      d.schema.merge(*info.schema);
    first = false;
  }
  if (inferred) {
    if (first)
      d.schema = infer_schema(d.splits);
    else
      d.schema.merge(infer_schema(d.splits));
  }
  return d;
}

void record_datasets(RunManifest& m, const std::vector<DatasetInfo>& infos,
                     const CorpusSplits& splits) {
  for (std::size_t i = 0; i < infos.size(); ++i) {
    DatasetRecord r;
    r.path = infos[i].path;
    r.hash = hex64(infos[i].content_hash);
    auto count = [&](const std::vector<Example>& xs) {
      return static_cast<std::size_t>(std::count_if(
          xs.begin(), xs.end(), [&](const Example& e) { return e.source == static_cast<int>(i); }));
    };
    r.train = count(splits.train);
    r.validation = count(splits.validation);
    r.test = count(splits.test);
    m.datasets.push_back(r);
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path);
  f << text;
}

nlohmann::json report_json(const TrainReport& r) {
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : r.epochs)
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"validation_loss", e.validation_loss},
                      {"validation_bleu", e.validation_bleu},
                      {"learning_rate", e.learning_rate},
                      {"clamped_logs", e.clamped_logs}});
  return {{"epochs", epochs},
          {"stopped_epoch", r.stopped_epoch},
          {"best_epoch", r.best_epoch},
          {"best_validation_bleu", r.best_validation_bleu},
          {"checkpoint", r.checkpoint_path},
          {"updates", r.updates},
          {"l2_updates", r.l2_updates}};
}

void write_eval_rows(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << "label\tda\thypothesis\tmissing\tredundant\ttotal\terr\n";
  for (const auto& r : reports)
    for (const auto& row : r.rows)
      out << r.label << '\t' << row.da << '\t' << row.hypothesis << '\t' << row.err.missing
          << '\t' << row.err.redundant << '\t' << row.err.total << '\t' << g17(row.err.err)
          << '\n';
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const ConfigFlags& flags, const std::vector<std::string>& args,
              std::ostream& out, std::ostream& err) {
  RunConfig c = flags.resolve();
  if (c.runs > 1 && (!c.init_from.empty() || !c.embeddings.empty()))
    throw ConfigError({"init_from and embeddings apply to single runs (runs = 1)"});
  LoadedData data = load_data(c);
  const std::string dir = flags.dir("train");
  RunDirLock lock(dir);

  std::optional<Model> warm;
  if (!c.init_from.empty()) {
    warm.emplace(Model::load(c.init_from));
    if (warm->hidden() != c.train.hidden) {
      err << "note: hidden size " << warm->hidden() << " taken from " << c.init_from << "\n";
      c.train.hidden = warm->hidden();
    }
  }
  RunManifest manifest = start_manifest("train", args, c);
  record_datasets(manifest, data.infos, data.splits);
  for (const auto& d : manifest.datasets)
    out << "data " << d.path << ": " << d.train << " train / " << d.validation
        << " validation / " << d.test << " test\n";

  const std::string ckpt = (fs::path(dir) / "model.ckpt").string();
  if (c.runs == 1) {
    Model model = warm ? std::move(*warm) : create_model(data.schema, data.splits, c.train);
    if (!c.embeddings.empty())
      out << "embeddings: replaced " << model.load_embeddings(c.embeddings) << " rows\n";
    std::ofstream log((fs::path(dir) / "train.log").string(), std::ios::trunc);
    TrainHooks hooks;
    hooks.checkpoint_path = ckpt;
    hooks.on_epoch = [&](const EpochRecord& r) {
      write_train_log(log, r);
      log.flush();
      char buf[160];
      std::snprintf(buf, sizeof(buf),
                    "epoch %3d  train %.4f  valid %.4f  bleu %.4f  lr %.4g\n", r.epoch,
                    r.train_loss, r.validation_loss, r.validation_bleu, r.learning_rate);
      out << buf << std::flush;
      if (r.clamped_logs > 0)
        err << "warning: " << r.clamped_logs
            << " target probabilities were floored at 1e-12 in epoch " << r.epoch << "\n";
    };
    manifest.checkpoint = absolute(ckpt);
    TrainReport report;
    try {
      report = train(model, data.splits, c.train, hooks);
    } catch (const NumericError&) {
      manifest.outputs = {"model.ckpt", "train.log"};
      finish_manifest(manifest, dir, out);
      throw;
    }
    write_text((fs::path(dir) / "train_report.json").string(), report_json(report).dump(2) + "\n");
    manifest.outputs = {"model.ckpt", "train.log", "train_report.json"};
    out << "best epoch " << report.best_epoch << " (validation BLEU "
        << report.best_validation_bleu << "), stopped at epoch " << report.stopped_epoch
        << "\n";
    if (!data.splits.test.empty()) {
      EvalReport test = evaluate(model, data.splits.test, c.beam, "test");
      std::ofstream tsv((fs::path(dir) / "test_eval.tsv").string(), std::ios::trunc);
      write_eval_tsv(tsv, {test}, false);
      write_eval_table(out, {test}, false);
      manifest.outputs.push_back("test_eval.tsv");
    }
  } else {
    auto report = run_multi_seed(data.schema, data.splits, c.train, c.runs, c.beam, dir,
                                 [&](const std::string& line) { out << line << "\n"; });
    const std::string tsv = (fs::path(dir) / "multi_seed.tsv").string();
    {
      std::ofstream f(tsv, std::ios::trunc);
      write_multi_seed_report(f, report);
    }
    fs::copy_file(report.runs[report.selected].checkpoint_path, ckpt,
                  fs::copy_options::overwrite_existing);
    manifest.checkpoint = absolute(ckpt);
    manifest.outputs = {"model.ckpt", "multi_seed.tsv"};
    for (const auto& r : report.runs)
      manifest.outputs.push_back(fs::relative(r.checkpoint_path, dir).string());
    out << "selected seed " << report.runs[report.selected].seed << "; mean test BLEU "
        << report.mean_test_bleu << ", max " << report.max_test_bleu
        << ", mean test ERR " << report.mean_test_err << "\n";
  }
  finish_manifest(manifest, dir, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// generate

struct GenerateFlags {
  std::string checkpoint;
  std::string input;
  std::vector<std::string> das;
  std::string s_trace;
};

int cmd_generate(const ConfigFlags& flags, const GenerateFlags& g,
                 const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  RunConfig c = flags.resolve();
  if (g.input.empty() && g.das.empty())
    throw ConfigError({"generate needs --input FILE or --da STRING"});
  const Model model = Model::load(g.checkpoint);

  std::vector<std::pair<std::string, std::string>> lines;  // origin, text
  if (!g.input.empty()) {
    std::ifstream in(g.input);
    if (!in) throw DataError("cannot open DA file " + g.input);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      lines.emplace_back(g.input + ":" + std::to_string(lineno), line);
    }
  }
  for (const auto& d : g.das) lines.emplace_back("--da", d);
  std::vector<DialogueAct> das;
  for (const auto& [origin, text] : lines) {
    try {
      das.push_back(parse_da(text));
    } catch (const ParseError& e) {
      throw DataError(origin + ": " + e.what());
    }
  }

  const std::string dir = flags.dir("generate");
  RunDirLock lock(dir);
  RunManifest manifest = start_manifest("generate", args, c);
  manifest.checkpoint = absolute(g.checkpoint);
  manifest.arguments["checkpoint"] = {absolute(g.checkpoint)};
  if (!g.input.empty()) manifest.arguments["input"] = {absolute(g.input)};
  if (!g.das.empty()) manifest.arguments["da"] = g.das;

  std::ostringstream tsv;
  std::ostringstream trace;
  if (!das.empty()) tsv << "da\trank\ttext\tF\terr\tR\n";
  for (const auto& da : das) {
    GenerationResult r = generate(model, da, c.beam);
    const std::string rendered = render_da(da);
    for (std::size_t k = 0; k < r.top.size(); ++k) {
      const auto& cand = r.top[k].candidate;
      tsv << rendered << '\t' << k + 1 << '\t' << r.top[k].text << '\t' << g17(cand.cost)
          << '\t' << g17(cand.err.err) << '\t' << g17(cand.score) << '\n';
    }
    if (!g.s_trace.empty() && !r.candidates.empty()) {
      trace << "# " << rendered << '\n';
      write_s_trace(trace, model, r.candidates.front(), r.trace);
      trace << '\n';
    }
  }
  out << tsv.str();
  write_text((fs::path(dir) / "generated.tsv").string(), tsv.str());
  manifest.outputs = {"generated.tsv"};
  if (!g.s_trace.empty()) {
    write_text(g.s_trace, trace.str());
    manifest.arguments["s-trace"] = {absolute(g.s_trace)};
    manifest.outputs.push_back(absolute(g.s_trace));
  }
  manifest.write((fs::path(dir) / "manifest.json").string());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateFlags {
  std::vector<std::string> checkpoints;
  std::string per_seed;
  std::string split = "test";
};

std::vector<Example> pick_split(const CorpusSplits& s, const std::string& which) {
  if (which == "train") return s.train;
  if (which == "validation") return s.validation;
  if (which == "test") return s.test;
  std::vector<Example> all = s.train;
  all.insert(all.end(), s.validation.begin(), s.validation.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  return all;
}

int cmd_evaluate(const ConfigFlags& flags, const EvaluateFlags& e,
                 const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  RunConfig c = flags.resolve();
  std::vector<std::string> ckpts = e.checkpoints;
  if (!e.per_seed.empty()) {
    if (!fs::is_directory(e.per_seed)) throw DataError("not a directory: " + e.per_seed);
    std::vector<std::string> found;
    for (const auto& entry : fs::directory_iterator(e.per_seed)) {
      const auto ck = entry.path() / "model.ckpt";
      if (entry.is_directory() && entry.path().filename().string().rfind("seed-", 0) == 0 &&
          fs::is_regular_file(ck))
        found.push_back(ck.string());
    }
    std::sort(found.begin(), found.end());
    if (found.empty()) throw DataError("no seed-*/model.ckpt under " + e.per_seed);
    ckpts.insert(ckpts.end(), found.begin(), found.end());
  }
  if (ckpts.empty()) throw ConfigError({"evaluate needs --checkpoint or --per-seed"});
  if (c.data.empty()) throw ConfigError({"no dataset given (use --data DIR)"});

  // Each dataset is evaluated separately so multi-domain runs get per-domain rows.
  std::vector<CorpusSplits> splits;
  std::vector<DatasetInfo> infos;
  for (const auto& d : c.data) {
    DatasetInfo info;
    splits.push_back(load_dataset(d, c.split, &info));
    infos.push_back(info);
  }
  std::vector<Model> models;
  for (const auto& ck : ckpts) models.push_back(Model::load(ck));

  const std::string dir = flags.dir("evaluate");
  RunDirLock lock(dir);
  RunManifest manifest = start_manifest("evaluate", args, c);
  for (const auto& ck : ckpts) manifest.arguments["checkpoint"].push_back(absolute(ck));
  manifest.arguments["split"] = {e.split};
  for (std::size_t i = 0; i < infos.size(); ++i) {
    DatasetRecord r{infos[i].path, hex64(infos[i].content_hash), splits[i].train.size(),
                    splits[i].validation.size(), splits[i].test.size()};
    manifest.datasets.push_back(r);
  }
  if (ckpts.size() == 1) manifest.checkpoint = absolute(ckpts.front());

  std::vector<EvalReport> all;
  std::ostringstream tsv;
  bool header_done = false;
  for (std::size_t d = 0; d < splits.size(); ++d) {
    const auto examples = pick_split(splits[d], e.split);
    if (examples.empty())
      throw DataError("split '" + e.split + "' of " + infos[d].path + " is empty");
    std::vector<EvalReport> group;
    const std::string domain = fs::path(infos[d].path).filename().string();
    for (std::size_t m = 0; m < models.size(); ++m) {
      std::string label = domain;
      if (models.size() > 1) label += "/" + fs::path(ckpts[m]).parent_path().filename().string();
      group.push_back(evaluate(models[m], examples, c.beam, label));
    }
    write_eval_table(out, group, models.size() > 1);
    std::ostringstream part;
    write_eval_tsv(part, group, models.size() > 1);
    std::string text = part.str();
    if (header_done) text = text.substr(text.find('\n') + 1);
    header_done = true;
    tsv << text;
    all.insert(all.end(), group.begin(), group.end());
  }
  write_text((fs::path(dir) / "eval.tsv").string(), tsv.str());
  std::ostringstream rows;
  write_eval_rows(rows, all);
  write_text((fs::path(dir) / "eval_rows.tsv").string(), rows.str());
  manifest.outputs = {"eval.tsv", "eval_rows.tsv"};
  finish_manifest(manifest, dir, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckFlags {
  GradCheckDims dims;
  std::vector<std::string> variants;
  double threshold = 1e-4;
  bool corrupt = false;
};

int cmd_gradcheck(const ConfigFlags& flags, const GradcheckFlags& g,
                  const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  if (auto p = g.dims.problems(); !p.empty()) throw ConfigError(p);
  std::vector<CellVariant> variants;
  for (const auto& v : g.variants) variants.push_back(parse_variant(v));
  if (variants.empty())
    variants = {CellVariant::kFull, CellVariant::kWithoutRefinement,
                CellVariant::kWithoutAdjustment};

  const std::string dir = flags.dir("gradcheck");
  RunDirLock lock(dir);
  RunManifest manifest = start_manifest("gradcheck", args, RunConfig{});
  manifest.seed = g.dims.seed;
  manifest.arguments = {{"hidden", {std::to_string(g.dims.hidden)}},
                        {"pairs", {std::to_string(g.dims.pairs)}},
                        {"length", {std::to_string(g.dims.length)}},
                        {"vocab", {std::to_string(g.dims.vocab)}},
                        {"seed", {std::to_string(g.dims.seed)}},
                        {"threshold", {g17(g.threshold)}}};
  for (auto v : variants) manifest.arguments["variant"].push_back(to_string(v));
  if (g.corrupt) manifest.arguments["corrupt-gradient"] = {""};

  std::function<void(ParameterSet&)> tamper;
  if (g.corrupt)
    tamper = [](ParameterSet& ps) { ps.at("dec.w_ho").grad(0, 0) += 1e-3; };

  bool ok = true;
  std::ostringstream result;
  for (auto v : variants) {
    const GradCheckResult r = model_gradcheck(g.dims, v, tamper);
    const bool pass = r.max_relative_error < g.threshold;
    ok = ok && pass;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradcheck %-4s max relative error %.3e over %zu entries (worst %s[%ld,%ld]) %s\n",
                  to_string(v).c_str(), r.max_relative_error, r.checked,
                  r.worst_parameter.c_str(), static_cast<long>(r.worst_row),
                  static_cast<long>(r.worst_col), pass ? "PASS" : "FAIL");
    result << buf;
  }
  out << result.str();
  write_text((fs::path(dir) / "gradcheck.txt").string(), result.str());
  manifest.outputs = {"gradcheck.txt"};
  manifest.write((fs::path(dir) / "manifest.json").string());
  return ok ? kExitOk : kExitNumeric;
}

// ---------------------------------------------------------------------------
// inspect

int cmd_inspect(const ConfigFlags& flags, const std::string& delex_cache,
                const std::vector<std::string>& args, std::ostream& out, std::ostream&) {
  RunConfig c = flags.resolve();
  LoadedData data = load_data(c);
  const std::string dir = flags.dir("inspect");
  RunDirLock lock(dir);
  RunManifest manifest = start_manifest("inspect", args, c);
  record_datasets(manifest, data.infos, data.splits);

  for (std::size_t i = 0; i < data.infos.size(); ++i) {
    const auto& info = data.infos[i];
    const auto& rec = manifest.datasets[i];
    out << "dataset " << info.path << "\n"
        << "  files: " << info.files.size() << (info.presplit ? " (pre-split)" : "") << "\n"
        << "  hash: " << rec.hash << "\n"
        << "  splits: " << rec.train << " / " << rec.validation << " / " << rec.test << "\n"
        << "  schema: " << (info.schema ? "schema.json" : "inferred") << "\n";
  }
  out << "acts (" << data.schema.acts().size() << "):";
  for (const auto& a : data.schema.acts()) out << ' ' << a;
  out << "\nslots (" << data.schema.slots().size() << "):";
  for (const auto& s : data.schema.slots())
    out << ' ' << s << (data.schema.is_delexicalizable(s) ? "" : "*");
  out << "\n  (* = never delexicalized)\n";
  const Vocab vocab = build_vocab(data.schema, data.splits.train);
  out << "decoder vocabulary: " << vocab.size() << " tokens\n";

  std::vector<Example> all = pick_split(data.splits, "all");
  const RoundTripReport rt = check_round_trip(all, &data.schema);
  out << "delexicalization round trip: " << rt.checked << " checked, " << rt.skipped
      << " skipped (value not found verbatim), " << rt.failures.size() << " mismatched\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(rt.failures.size(), 5); ++i)
    out << "  " << rt.failures[i] << "\n";

  manifest.outputs = {};
  if (!delex_cache.empty()) {
    std::vector<DelexExample> cache;
    for (const auto& e : all)
      cache.push_back({e.da, delexicalize(e.reference, e.da, &data.schema).tokens});
    write_delex_cache(delex_cache, cache);
    manifest.arguments["delex-cache"] = {absolute(delex_cache)};
    manifest.outputs.push_back(absolute(delex_cache));
    out << "delexicalized cache: " << delex_cache << "\n";
  }
  finish_manifest(manifest, dir, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// replay

std::vector<std::string> replay_args(const RunManifest& m, const std::string& run_dir) {
  std::vector<std::string> a{m.command};
  if (m.command != "gradcheck")
    for (const auto& [k, v] : m.config) a.insert(a.end(), {"--set", k + "=" + v});
  for (const auto& [k, values] : m.arguments) {
    for (const auto& v : values) {
      a.push_back("--" + k);
      if (!v.empty()) a.push_back(v);
    }
  }
  a.insert(a.end(), {"--run-dir", run_dir});
  return a;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"RALSTM attention encoder-decoder NLG for task-oriented dialogue", "ralstm"};
  app.require_subcommand(1);

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "train a model (or several seeds)");
  train_flags.add_common(train, "train");
  train_flags.add_data(train);
  train_flags.add_train(train);
  train_flags.add_beam(train);

  ConfigFlags gen_flags;
  GenerateFlags gen;
  auto* generate_cmd = app.add_subcommand("generate", "over-generate and rerank realizations");
  gen_flags.add_common(generate_cmd, "generate");
  gen_flags.add_beam(generate_cmd);
  generate_cmd->add_option("--checkpoint", gen.checkpoint, "model checkpoint")->required();
  generate_cmd->add_option("--input", gen.input, "file with one DA per line");
  generate_cmd->add_option("--da", gen.das, "a DA string, repeatable");
  generate_cmd->add_option("--s-trace", gen.s_trace, "write the DA-vector trace of each top candidate");

  ConfigFlags eval_flags;
  EvaluateFlags ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "BLEU and slot error rate on a split");
  eval_flags.add_common(evaluate_cmd, "evaluate");
  eval_flags.add_data(evaluate_cmd);
  eval_flags.add_beam(evaluate_cmd);
  evaluate_cmd->add_option("--checkpoint", ev.checkpoints, "model checkpoint, repeatable");
  evaluate_cmd->add_option("--per-seed", ev.per_seed,
                           "directory of seed-*/model.ckpt runs; adds a mean row");
  evaluate_cmd->add_option("--split", ev.split, "train | validation | test | all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));

  ConfigFlags gc_flags;
  GradcheckFlags gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full model");
  gradcheck->add_option("--run-dir", gc_flags.run_dir, "output directory (default runs/gradcheck)");
  gradcheck->add_option("--hidden", gc.dims.hidden, "hidden size n (<= 8)");
  gradcheck->add_option("--pairs", gc.dims.pairs, "slot-value pairs L");
  gradcheck->add_option("--length", gc.dims.length, "target tokens T");
  gradcheck->add_option("--vocab", gc.dims.vocab, "decoder vocabulary size");
  gradcheck->add_option("--seed", gc.dims.seed, "random seed");
  gradcheck->add_option("--variant", gc.variants, "variant(s) to check (default all)");
  gradcheck->add_option("--threshold", gc.threshold, "maximum relative error");
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt)->group("");

  ConfigFlags inspect_flags;
  std::string delex_cache;
  auto* inspect = app.add_subcommand("inspect", "dataset statistics and delexicalization check");
  inspect_flags.add_common(inspect, "inspect");
  inspect_flags.add_data(inspect);
  inspect->add_option("--delex-cache", delex_cache, "write delexicalized examples here");

  std::string manifest_path;
  std::string replay_dir;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("--manifest", manifest_path, "manifest.json to replay")->required();
  replay->add_option("--run-dir", replay_dir, "output directory for the replay")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(train_flags, args, out, err);
    if (generate_cmd->parsed()) return cmd_generate(gen_flags, gen, args, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(eval_flags, ev, args, out, err);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_flags, gc, args, out, err);
    if (inspect->parsed()) return cmd_inspect(inspect_flags, delex_cache, args, out, err);
    if (replay->parsed()) {
      const RunManifest m = RunManifest::read(manifest_path);
      return run(replay_args(m, replay_dir), out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const RunDirBusy& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace ralstm::cli
