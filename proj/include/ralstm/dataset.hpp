#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ralstm/corpus.hpp"

namespace ralstm {

struct Example {
  DialogueAct da;
  std::string da_text;    // as written in the source file
  std::string reference;  // lexicalized reference utterance
  int source = 0;         // index of the dataset it came from
};

struct CorpusSplits {
  std::vector<Example> train;
  std::vector<Example> validation;
  std::vector<Example> test;
};

struct SplitRatio {
  int train = 3;
  int validation = 1;
  int test = 1;
};

struct DatasetInfo {
  std::string path;
  std::optional<DomainSchema> schema;  // from schema.json when present
  std::uint64_t content_hash = 0;      // FNV-1a over the data files read
  std::vector<std::string> files;
  bool presplit = false;
};

// Reads an RNNLG-style directory. When train.json, valid.json (or
// validation.json / dev.json) and test.json exist they are used as the
// splits; otherwise every other *.json file is concatenated in name order
// and cut by `ratio` in file order. Each file holds a JSON array of
// [DA-string, reference, ...] entries. Lines starting with '#' are ignored.
// Throws DataError with file:line for malformed input.
CorpusSplits load_dataset(const std::string& path, SplitRatio ratio = {},
                          DatasetInfo* info = nullptr);

// Concatenates several datasets; Example::source records the origin.
CorpusSplits load_datasets(const std::vector<std::string>& paths,
                           SplitRatio ratio = {},
                           std::vector<DatasetInfo>* infos = nullptr);

// Acts and slots in first-seen order over all splits; a slot is
// delexicalizable when any example gives it an ordinary text value.
DomainSchema infer_schema(const CorpusSplits& splits);

struct DelexExample {
  DialogueAct da;
  std::vector<std::string> tokens;
};

// Line-oriented cache: a header line, then `DA-string TAB tokens`.
void write_delex_cache(const std::string& path,
                       const std::vector<DelexExample>& examples);
std::vector<DelexExample> read_delex_cache(const std::string& path);

struct RoundTripReport {
  std::size_t checked = 0;    // examples whose values all occur verbatim
  std::size_t skipped = 0;    // examples with at least one unmatched value
  std::vector<std::string> failures;  // "<da> || <reference>"
};

// delexicalize -> lexicalize over every example; compares token streams.
RoundTripReport check_round_trip(const std::vector<Example>& examples,
                                 const DomainSchema* schema);

}  // namespace ralstm
