#include "ralstm/config.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace ralstm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    out = false;
    return true;
  }
  return false;
}

}  // namespace

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::vector<std::string> problems;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(lineno);
    if (eq == std::string::npos) {
      problems.push_back(where + ": expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      problems.push_back(where + ": empty key");
      continue;
    }
    kv[key] = trim(line.substr(eq + 1));
  }
  if (!problems.empty()) throw ConfigError(problems);
  return kv;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys{
      {"hidden", "hidden size n (even)"},
      {"variant", "full | wo-r | wo-a"},
      {"learning_rate", "initial SGD learning rate"},
      {"lr_decay", "factor applied when validation loss fails to improve"},
      {"l2", "l2 coefficient"},
      {"l2_cadence", "decay joins every n-th example's update"},
      {"l2_mode", "every-nth | accumulated"},
      {"dropout", "dropout rate in [0, 1)"},
      {"max_epochs", "upper bound on training epochs"},
      {"patience", "epochs without validation-loss improvement before stopping"},
      {"seed", "random seed"},
      {"grad_clip", "gradient norm clip (0 disables)"},
      {"init_scale", "uniform initialisation half-width"},
      {"shuffle", "shuffle training examples each epoch"},
      {"validation_beam", "beam width for per-epoch validation BLEU"},
      {"beam", "beam width"},
      {"overgen", "candidates kept by beam search"},
      {"top_k", "realizations returned per DA"},
      {"lambda", "slot-error penalty weight"},
      {"max_length", "maximum generated tokens"},
      {"data", "comma-separated dataset directories"},
      {"split", "train:validation:test ratio for unsplit data"},
      {"init_from", "checkpoint to warm-start from"},
      {"embeddings", "pretrained decoder embedding file"},
      {"runs", "number of seeds for multi-seed training"},
  };
  return keys;
}

RunConfig resolve_config(const KeyValues& file, const KeyValues& overrides) {
  RunConfig c;
  std::vector<std::string> problems;

  auto apply = [&](const std::string& origin, const std::string& key,
                   const std::string& value) {
    auto bad = [&](const std::string& what) {
      problems.push_back(origin + ": " + key + " = '" + value + "': " + what);
    };
    auto integer = [&](int& dst) {
      if (!parse_number(value, dst)) bad("expected an integer");
    };
    auto real = [&](double& dst) {
      if (!parse_number(value, dst)) bad("expected a number");
    };
    if (key == "hidden") integer(c.train.hidden);
    else if (key == "learning_rate") real(c.train.learning_rate);
    else if (key == "lr_decay") real(c.train.lr_decay);
    else if (key == "l2") real(c.train.l2);
    else if (key == "l2_cadence") integer(c.train.l2_cadence);
    else if (key == "dropout") real(c.train.dropout);
    else if (key == "max_epochs") integer(c.train.max_epochs);
    else if (key == "patience") integer(c.train.patience);
    else if (key == "grad_clip") real(c.train.grad_clip);
    else if (key == "init_scale") real(c.train.init_scale);
    else if (key == "validation_beam") integer(c.train.validation_beam);
    else if (key == "beam") integer(c.beam.beam_width);
    else if (key == "overgen") integer(c.beam.overgen);
    else if (key == "top_k") integer(c.beam.top_k);
    else if (key == "lambda") real(c.beam.lambda);
    else if (key == "max_length") integer(c.beam.max_length);
    else if (key == "runs") integer(c.runs);
    else if (key == "init_from") c.init_from = value;
    else if (key == "embeddings") c.embeddings = value;
    else if (key == "data") c.data = split_list(value);
    else if (key == "seed") {
      if (!parse_number(value, c.train.seed)) bad("expected a non-negative integer");
    } else if (key == "shuffle") {
      if (!parse_bool(value, c.train.shuffle)) bad("expected true or false");
    } else if (key == "variant") {
      try {
        c.train.variant = parse_variant(value);
      } catch (const ConfigError&) {
        bad("expected full, wo-r or wo-a");
      }
    } else if (key == "l2_mode") {
      try {
        c.train.l2_mode = parse_l2_mode(value);
      } catch (const ConfigError&) {
        bad("expected every-nth or accumulated");
      }
    } else if (key == "split") {
      int a = 0, b = 0, d = 0;
      char x = 0, y = 0;
      std::istringstream in(value);
      if (!(in >> a >> x >> b >> y >> d) || x != ':' || y != ':' || a < 1 || b < 0 || d < 0)
        bad("expected train:validation:test, e.g. 3:1:1");
      else
        c.split = {a, b, d};
    } else {
      problems.push_back(origin + ": unknown key '" + key + "'");
    }
  };

  for (const auto& [k, v] : file) apply("config file", k, v);
  for (const auto& [k, v] : overrides) apply("command line", k, v);

  for (const auto& p : c.train.problems()) problems.push_back(p);
  for (const auto& p : c.beam.problems()) problems.push_back(p);
  if (c.runs < 1) problems.push_back("runs must be >= 1");
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

KeyValues to_key_values(const RunConfig& c) {
  std::string data;
  for (const auto& d : c.data) data += (data.empty() ? "" : ",") + d;
  return {
      {"hidden", std::to_string(c.train.hidden)},
      {"variant", to_string(c.train.variant)},
      {"learning_rate", g17(c.train.learning_rate)},
      {"lr_decay", g17(c.train.lr_decay)},
      {"l2", g17(c.train.l2)},
      {"l2_cadence", std::to_string(c.train.l2_cadence)},
      {"l2_mode", to_string(c.train.l2_mode)},
      {"dropout", g17(c.train.dropout)},
      {"max_epochs", std::to_string(c.train.max_epochs)},
      {"patience", std::to_string(c.train.patience)},
      {"seed", std::to_string(c.train.seed)},
      {"grad_clip", g17(c.train.grad_clip)},
      {"init_scale", g17(c.train.init_scale)},
      {"shuffle", c.train.shuffle ? "true" : "false"},
      {"validation_beam", std::to_string(c.train.validation_beam)},
      {"beam", std::to_string(c.beam.beam_width)},
      {"overgen", std::to_string(c.beam.overgen)},
      {"top_k", std::to_string(c.beam.top_k)},
      {"lambda", g17(c.beam.lambda)},
      {"max_length", std::to_string(c.beam.max_length)},
      {"data", data},
      {"split", std::to_string(c.split.train) + ":" + std::to_string(c.split.validation) +
                    ":" + std::to_string(c.split.test)},
      {"init_from", c.init_from},
      {"embeddings", c.embeddings},
      {"runs", std::to_string(c.runs)},
  };
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : datasets)
    ds.push_back({{"path", d.path},
                  {"hash", d.hash},
                  {"train", d.train},
                  {"validation", d.validation},
                  {"test", d.test}});
  return {{"command", command},   {"command_line", command_line},
          {"config", config},     {"arguments", arguments},
          {"seed", seed},         {"datasets", ds},
          {"checkpoint", checkpoint}, {"timestamp", timestamp},
          {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.command_line = j.value("command_line", std::vector<std::string>{});
    m.config = j.at("config").get<KeyValues>();
    m.arguments = j.value("arguments", std::map<std::string, std::vector<std::string>>{});
    m.seed = j.value("seed", std::uint64_t{0});
    for (const auto& d : j.value("datasets", nlohmann::json::array()))
      m.datasets.push_back({d.at("path").get<std::string>(), d.at("hash").get<std::string>(),
                            d.value("train", std::size_t{0}),
                            d.value("validation", std::size_t{0}),
                            d.value("test", std::size_t{0})});
    m.checkpoint = j.value("checkpoint", "");
    m.timestamp = j.value("timestamp", "");
    m.outputs = j.value("outputs", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({std::string("malformed manifest: ") + e.what()});
  }
  return m;
}

void RunManifest::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write manifest " + path);
  out << to_json().dump(2) << '\n';
}

RunManifest RunManifest::read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open manifest " + path});
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace ralstm
