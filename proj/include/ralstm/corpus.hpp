#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "ralstm/autodiff.hpp"

namespace ralstm {

// ---------------------------------------------------------------------------
// Dialogue acts

enum class ValueKind : std::uint8_t {
  kText,      // ordinary value, e.g. name='bar crudo'
  kNone,      // none
  kYes,       // yes
  kNo,        // no
  kDontCare,  // dontcare
  kAbsent,    // slot without a value, e.g. request(area)
};

struct SlotValue {
  std::string slot;
  std::string value;
  ValueKind kind = ValueKind::kText;

  bool operator==(const SlotValue&) const = default;
};

struct DialogueAct {
  std::string act;
  bool query = false;  // leading '?' as in ?compare(...)
  std::vector<SlotValue> pairs;

  bool operator==(const DialogueAct&) const = default;
};

// Grammar: ['?'] act '(' [slot ['=' value] {(','|';') slot ['=' value]}] ')'
// Values may be single- or double-quoted (backslash escapes inside quotes).
// Act and slot names are lowercased. Throws ParseError with a byte offset.
DialogueAct parse_da(std::string_view text);

// Canonical form; parse_da(render_da(da)) == da.
std::string render_da(const DialogueAct& da);

// Stable sort of pairs by slot name. Encoder input order.
DialogueAct sort_pairs_for_encoder(DialogueAct da);

// ---------------------------------------------------------------------------
// Schema and DA features

class DomainSchema {
 public:
  DomainSchema() = default;
  DomainSchema(std::vector<std::string> acts,
               std::vector<std::pair<std::string, bool>> slots);

  static DomainSchema from_json(const nlohmann::json& j);
  static DomainSchema load(const std::string& path);
  nlohmann::json to_json() const;

  // Union of acts and slots; throws SchemaError on conflicting slot flags.
  void merge(const DomainSchema& other);

  const std::vector<std::string>& acts() const { return acts_; }
  const std::vector<std::string>& slots() const { return slots_; }
  std::optional<int> act_index(const std::string& act) const;
  std::optional<int> slot_index(const std::string& slot) const;
  bool is_delexicalizable(const std::string& slot) const;

  int feature_size() const {
    return static_cast<int>(acts_.size() + slots_.size());
  }
  // "act:<name>" then "slot:<name>", in feature-bit order.
  std::vector<std::string> feature_names() const;

 private:
  std::vector<std::string> acts_;
  std::vector<std::string> slots_;
  std::vector<bool> delexicalizable_;
};

struct DaFeatureVector {
  Vector bits;  // entries in {0, 1}
};

// One act bit plus one bit per distinct slot. Throws SchemaError for acts or
// slots missing from the schema.
DaFeatureVector encode_da_features(const DialogueAct& da,
                                   const DomainSchema& schema);

// True when the pair surfaces as a slot token in delexicalized text.
bool is_delexicalized_pair(const SlotValue& pair, const DomainSchema* schema);

// ---------------------------------------------------------------------------
// Text

// Lowercase; punctuation padded with spaces (except '.' and ',' between
// digits); split on whitespace.
std::vector<std::string> tokenize(std::string_view text);
std::string join_tokens(const std::vector<std::string>& tokens);

std::string slot_token(const std::string& slot);  // name -> SLOT_NAME
bool is_slot_token(std::string_view token);
std::string slot_of_token(std::string_view token);  // SLOT_NAME -> name

struct SlotOccurrence {
  std::string slot;
  std::string value;
  // Index into DelexicalizedUtterance::tokens, or npos when unmatched.
  std::size_t position = npos;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  bool matched() const { return position != npos; }
};

struct DelexicalizedUtterance {
  std::vector<std::string> tokens;
  std::vector<SlotOccurrence> occurrences;  // DA pair order
};

// Replaces each delexicalizable pair's value (longest value first, first
// free occurrence) by its slot token. With a null schema every text-valued
// pair is delexicalizable.
DelexicalizedUtterance delexicalize(std::string_view text, const DialogueAct& da,
                                    const DomainSchema* schema = nullptr);

// The k-th SLOT_x token takes the value of the k-th delexicalized pair with
// slot x. Tokens with no remaining pair are kept verbatim and counted in
// `unfilled`.
std::string lexicalize(const std::vector<std::string>& tokens,
                       const DialogueAct& da,
                       const DomainSchema* schema = nullptr,
                       int* unfilled = nullptr);

// ---------------------------------------------------------------------------
// Vocabulary

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  // Encoder-side reserved ids (slot and value tables).
  static constexpr int kEncUnk = 0;
  static constexpr int kEncNull = 1;

  Vocab();

  // Decoder tokens: specials, every delexicalizable slot token of the
  // schema, then words of `sentences` in first-seen order. Encoder tables:
  // schema slots, and value keys of `das`.
  static Vocab build(const DomainSchema& schema,
                     const std::vector<std::vector<std::string>>& sentences,
                     const std::vector<DialogueAct>& das);

  int add_token(const std::string& token);
  int token_id(const std::string& token) const;  // kUnk when missing
  const std::string& token(int id) const { return tokens_.at(id); }
  int size() const { return static_cast<int>(tokens_.size()); }
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  int slot_id(const std::string& slot) const;    // kEncUnk when missing
  int value_id(const std::string& key) const;    // kEncUnk when missing
  int slot_table_size() const { return static_cast<int>(slots_.size()); }
  int value_table_size() const { return static_cast<int>(values_.size()); }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);
  // FNV-1a over the serialized token tables.
  std::uint64_t hash() const;

  bool operator==(const Vocab& o) const {
    return tokens_ == o.tokens_ && slots_ == o.slots_ && values_ == o.values_;
  }

 private:
  static int add_to(std::vector<std::string>& list,
                    std::unordered_map<std::string, int>& index,
                    const std::string& key);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> token_index_;
  std::vector<std::string> slots_;
  std::unordered_map<std::string, int> slot_index_;
  std::vector<std::string> values_;
  std::unordered_map<std::string, int> value_index_;
};

// Key used to look up a pair's value embedding: the slot token for
// delexicalized values, the special value name for specials, "<absent>" for
// slot-only pairs and the raw value otherwise.
std::string encoder_value_key(const SlotValue& pair, const DomainSchema* schema);

std::uint64_t fnv1a(std::string_view bytes,
                    std::uint64_t seed = 14695981039346656037ull);

}  // namespace ralstm
