#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ralstm/dataset.hpp"
#include "ralstm/generator.hpp"
#include "ralstm/trainer.hpp"

namespace ralstm {

using KeyValues = std::map<std::string, std::string>;

// `key = value` lines; '#' starts a comment; blank lines ignored. Throws
// ConfigError listing every malformed line.
KeyValues parse_config_text(const std::string& text, const std::string& origin);
KeyValues read_config_file(const std::string& path);

struct RunConfig {
  TrainConfig train;
  BeamConfig beam;
  std::vector<std::string> data;
  SplitRatio split;
  std::string init_from;
  std::string embeddings;
  int runs = 1;
};

// Every recognised key with its documented meaning, in display order.
const std::vector<std::pair<std::string, std::string>>& config_keys();

// Defaults, then `file`, then `overrides`. Unknown keys, unparsable values
// and invariant violations are collected and thrown together as one
// ConfigError.
RunConfig resolve_config(const KeyValues& file, const KeyValues& overrides);

// Every key with its resolved value (defaults materialized). Doubles use
// round-trip precision.
KeyValues to_key_values(const RunConfig& c);

struct DatasetRecord {
  std::string path;
  std::string hash;  // hex FNV-1a of the files read
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> command_line;
  KeyValues config;
  // Command-specific flags (checkpoint, input, ...); an empty value is a
  // bare switch.
  std::map<std::string, std::vector<std::string>> arguments;
  std::uint64_t seed = 0;
  std::vector<DatasetRecord> datasets;
  std::string checkpoint;
  std::string timestamp;  // UTC, ISO 8601
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  void write(const std::string& path) const;
  static RunManifest read(const std::string& path);
};

std::string hex64(std::uint64_t v);
std::string utc_timestamp();

}  // namespace ralstm
