#include "ralstm/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace ralstm {

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_of(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

// Blanks '#' comment lines so JSON byte offsets still map to source lines.
std::string strip_comments(std::string text) {
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::size_t first = start;
    while (first < end && (text[first] == ' ' || text[first] == '\t')) ++first;
    if (first < end && text[first] == '#')
      std::fill(text.begin() + static_cast<long>(start),
                text.begin() + static_cast<long>(end), ' ');
    start = end + 1;
  }
  return text;
}

std::vector<Example> read_examples(const fs::path& file, std::uint64_t& hash) {
  const std::string raw = read_file(file);
  hash = fnv1a(raw, hash);
  const std::string text = strip_comments(raw);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(file.string() + ":" + std::to_string(line_of(text, e.byte)) +
                    ": malformed JSON: " + e.what());
  }
  if (!j.is_array())
    throw DataError(file.string() + ":1: expected a JSON array of entries");

  std::vector<Example> out;
  std::size_t search_from = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& entry = j[i];
    if (!entry.is_array() || entry.size() < 2 || !entry[0].is_string() ||
        !entry[1].is_string()) {
      throw DataError(file.string() + ": entry " + std::to_string(i) +
                      ": expected [DA-string, reference, ...]");
    }
    Example ex;
    ex.da_text = entry[0].get<std::string>();
    ex.reference = entry[1].get<std::string>();
    const std::string quoted = entry[0].dump();
    const std::size_t at = text.find(quoted, search_from);
    const std::size_t line = at == std::string::npos ? 0 : line_of(text, at);
    if (at != std::string::npos) search_from = at + quoted.size();
    try {
      ex.da = parse_da(ex.da_text);
    } catch (const ParseError& e) {
      throw DataError(file.string() + ":" + std::to_string(line) +
                      ": cannot parse dialogue act: " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::optional<fs::path> first_existing(const fs::path& dir,
                                       std::initializer_list<const char*> names) {
  for (const char* n : names) {
    fs::path p = dir / n;
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

CorpusSplits load_dataset(const std::string& path, SplitRatio ratio,
                          DatasetInfo* info) {
  const fs::path dir(path);
  if (!fs::is_directory(dir)) throw DataError("no data: " + path + " is not a directory");
  if (ratio.train <= 0 || ratio.validation < 0 || ratio.test < 0)
    throw DataError("invalid split ratio");

  DatasetInfo local;
  DatasetInfo& meta = info ? *info : local;
  meta = DatasetInfo{};
  meta.path = path;
  if (fs::is_regular_file(dir / "schema.json"))
    meta.schema = DomainSchema::load((dir / "schema.json").string());

  CorpusSplits splits;
  auto train = first_existing(dir, {"train.json"});
  auto valid = first_existing(dir, {"valid.json", "validation.json", "dev.json"});
  auto test = first_existing(dir, {"test.json"});
  if (train && valid && test) {
    meta.presplit = true;
    for (const auto& p : {*train, *valid, *test}) meta.files.push_back(p.string());
    splits.train = read_examples(*train, meta.content_hash);
    splits.validation = read_examples(*valid, meta.content_hash);
    splits.test = read_examples(*test, meta.content_hash);
  } else {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      if (e.path().filename() == "schema.json") continue;
      files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Example> all;
    for (const auto& f : files) {
      meta.files.push_back(f.string());
      auto part = read_examples(f, meta.content_hash);
      all.insert(all.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
    }
    if (all.empty()) throw DataError("no data: no examples found in " + path);
    const std::size_t total = ratio.train + ratio.validation + ratio.test;
    const std::size_t n_val = all.size() * ratio.validation / total;
    const std::size_t n_test = all.size() * ratio.test / total;
    const std::size_t n_train = all.size() - n_val - n_test;
    splits.train.assign(all.begin(), all.begin() + static_cast<long>(n_train));
    splits.validation.assign(all.begin() + static_cast<long>(n_train),
                             all.begin() + static_cast<long>(n_train + n_val));
    splits.test.assign(all.begin() + static_cast<long>(n_train + n_val), all.end());
  }
  if (splits.train.empty() && splits.validation.empty() && splits.test.empty())
    throw DataError("no data: " + path + " contains no examples");
  return splits;
}

CorpusSplits load_datasets(const std::vector<std::string>& paths,
                           SplitRatio ratio, std::vector<DatasetInfo>* infos) {
  if (paths.empty()) throw DataError("no data: no dataset given");
  CorpusSplits all;
  if (infos) infos->clear();
  for (std::size_t i = 0; i < paths.size(); ++i) {
    DatasetInfo info;
    CorpusSplits s = load_dataset(paths[i], ratio, &info);
    for (auto* split : {&s.train, &s.validation, &s.test})
      for (auto& ex : *split) ex.source = static_cast<int>(i);
    all.train.insert(all.train.end(), s.train.begin(), s.train.end());
    all.validation.insert(all.validation.end(), s.validation.begin(), s.validation.end());
    all.test.insert(all.test.end(), s.test.begin(), s.test.end());
    if (infos) infos->push_back(std::move(info));
  }
  return all;
}

void write_delex_cache(const std::string& path,
                       const std::vector<DelexExample>& examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "#ralstm-delex-cache\t1\n";
  for (const auto& ex : examples)
    out << render_da(ex.da) << '\t' << join_tokens(ex.tokens) << '\n';
}

std::vector<DelexExample> read_delex_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "#ralstm-delex-cache\t1")
    throw DataError(path + ":1: not a delexicalized corpus cache (version 1)");
  std::vector<DelexExample> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw DataError(path + ":" + std::to_string(lineno) + ": missing TAB");
    DelexExample ex;
    try {
      ex.da = parse_da(std::string_view(line).substr(0, tab));
    } catch (const ParseError& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    std::istringstream toks(line.substr(tab + 1));
    for (std::string t; toks >> t;) ex.tokens.push_back(t);
    out.push_back(std::move(ex));
  }
  return out;
}

RoundTripReport check_round_trip(const std::vector<Example>& examples,
                                 const DomainSchema* schema) {
  RoundTripReport report;
  for (const auto& ex : examples) {
    const auto delex = delexicalize(ex.reference, ex.da, schema);
    const bool all_matched =
        std::all_of(delex.occurrences.begin(), delex.occurrences.end(),
                    [](const SlotOccurrence& o) { return o.matched(); });
    if (!all_matched) {
      ++report.skipped;
      continue;
    }
    ++report.checked;
    const std::string back = lexicalize(delex.tokens, ex.da, schema);
    if (tokenize(back) != tokenize(ex.reference))
      report.failures.push_back(ex.da_text + " || " + ex.reference);
  }
  return report;
}

DomainSchema infer_schema(const CorpusSplits& splits) {
  std::vector<std::string> acts;
  std::vector<std::pair<std::string, bool>> slots;
  for (const auto* part : {&splits.train, &splits.validation, &splits.test}) {
    for (const auto& e : *part) {
      if (std::find(acts.begin(), acts.end(), e.da.act) == acts.end()) acts.push_back(e.da.act);
      for (const auto& p : e.da.pairs) {
        auto it = std::find_if(slots.begin(), slots.end(),
                               [&](const auto& s) { return s.first == p.slot; });
        const bool text = p.kind == ValueKind::kText;
        if (it == slots.end())
          slots.emplace_back(p.slot, text);
        else
          it->second = it->second || text;
      }
    }
  }
  if (acts.empty()) throw DataError("cannot infer a schema from an empty dataset");
  return DomainSchema(std::move(acts), std::move(slots));
}

}  // namespace ralstm
