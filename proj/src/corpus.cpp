#include "ralstm/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ralstm {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

ValueKind classify_value(const std::string& v) {
  const std::string s = lower(v);
  if (s == "none") return ValueKind::kNone;
  if (s == "yes" || s == "true") return ValueKind::kYes;
  if (s == "no" || s == "false") return ValueKind::kNo;
  if (s == "dontcare" || s == "dont_care" || s == "don't care") return ValueKind::kDontCare;
  return ValueKind::kText;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

class DaParser {
 public:
  explicit DaParser(std::string_view text) : s_(text) {}

  DialogueAct parse() {
    DialogueAct da;
    skip_ws();
    if (peek() == '?') {
      da.query = true;
      ++pos_;
      skip_ws();
    }
    const std::size_t act_start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    if (pos_ == act_start) throw ParseError("empty act type", act_start);
    da.act = lower(s_.substr(act_start, pos_ - act_start));
    skip_ws();
    if (peek() != '(') throw ParseError("expected '('", pos_);
    const std::size_t open = pos_++;
    skip_ws();
    if (peek() != ')') {
      while (true) {
        skip_ws();
        if (at_end()) throw ParseError("unbalanced parenthesis", open);
        if (peek() == ')') break;  // trailing separator
        da.pairs.push_back(parse_pair(open));
        skip_ws();
        if (at_end()) throw ParseError("unbalanced parenthesis", open);
        if (peek() == ',' || peek() == ';') {
          ++pos_;
          continue;
        }
        if (peek() == ')') break;
        throw ParseError("expected ',', ';' or ')'", pos_);
      }
    }
    ++pos_;  // ')'
    skip_ws();
    if (!at_end()) throw ParseError("trailing characters after ')'", pos_);
    return da;
  }

 private:
  SlotValue parse_pair(std::size_t open) {
    SlotValue sv;
    const std::size_t start = pos_;
    while (pos_ < s_.size() && is_name_char(s_[pos_])) ++pos_;
    if (pos_ == start) throw ParseError("expected slot name", pos_);
    sv.slot = lower(s_.substr(start, pos_ - start));
    skip_ws();
    if (peek() != '=') {
      sv.kind = ValueKind::kAbsent;
      return sv;
    }
    ++pos_;
    skip_ws();
    if (peek() == '\'' || peek() == '"') {
      sv.value = parse_quoted();
    } else {
      const std::size_t vstart = pos_;
      while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ';' &&
             s_[pos_] != ')') {
        if (s_[pos_] == '(' || s_[pos_] == '\'' || s_[pos_] == '"')
          throw ParseError("unexpected character in unquoted value", pos_);
        ++pos_;
      }
      if (at_end()) throw ParseError("unbalanced parenthesis", open);
      sv.value = trim(s_.substr(vstart, pos_ - vstart));
    }
    if (sv.value.empty()) {
      sv.kind = ValueKind::kAbsent;
    } else {
      sv.kind = classify_value(sv.value);
    }
    return sv;
  }

  std::string parse_quoted() {
    const char quote = s_[pos_];
    const std::size_t start = pos_++;
    std::string out;
    while (true) {
      if (at_end()) throw ParseError("unbalanced quote", start);
      char c = s_[pos_++];
      if (c == quote) break;
      if (c == '\\') {
        if (at_end()) throw ParseError("unbalanced quote", start);
        c = s_[pos_++];
      }
      out.push_back(c);
    }
    return trim(out);
  }

  char peek() const { return at_end() ? '\0' : s_[pos_]; }
  bool at_end() const { return pos_ >= s_.size(); }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

bool is_punct_to_pad(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':':
    case '(': case ')': case '"': case '[': case ']':
      return true;
    default:
      return false;
  }
}

}  // namespace

DialogueAct parse_da(std::string_view text) { return DaParser(text).parse(); }

std::string render_da(const DialogueAct& da) {
  std::string out;
  if (da.query) out += '?';
  out += da.act;
  out += '(';
  for (std::size_t i = 0; i < da.pairs.size(); ++i) {
    const auto& p = da.pairs[i];
    if (i) out += ';';
    out += p.slot;
    if (p.kind == ValueKind::kAbsent) continue;
    out += "='";
    for (char c : p.value) {
      if (c == '\'' || c == '\\') out += '\\';
      out += c;
    }
    out += '\'';
  }
  out += ')';
  return out;
}

DialogueAct sort_pairs_for_encoder(DialogueAct da) {
  std::stable_sort(da.pairs.begin(), da.pairs.end(),
                   [](const SlotValue& a, const SlotValue& b) { return a.slot < b.slot; });
  return da;
}

// ---------------------------------------------------------------------------
// Schema

DomainSchema::DomainSchema(std::vector<std::string> acts,
                           std::vector<std::pair<std::string, bool>> slots)
    : acts_(std::move(acts)) {
  for (auto& [name, delex] : slots) {
    slots_.push_back(name);
    delexicalizable_.push_back(delex);
  }
}

DomainSchema DomainSchema::from_json(const nlohmann::json& j) {
  std::vector<std::string> problems;
  if (!j.is_object()) throw SchemaError("schema must be a JSON object");
  std::vector<std::string> acts;
  std::vector<std::pair<std::string, bool>> slots;
  if (!j.contains("acts") || !j["acts"].is_array() || j["acts"].empty())
    throw SchemaError("schema: 'acts' must be a nonempty array");
  for (const auto& a : j["acts"]) acts.push_back(lower(a.get<std::string>()));
  if (j.contains("slots")) {
    for (const auto& s : j["slots"]) {
      if (s.is_string()) {
        slots.emplace_back(lower(s.get<std::string>()), true);
      } else {
        slots.emplace_back(lower(s.at("name").get<std::string>()),
                           s.value("delexicalize", true));
      }
    }
  }
  return DomainSchema(std::move(acts), std::move(slots));
}

DomainSchema DomainSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

nlohmann::json DomainSchema::to_json() const {
  nlohmann::json slots = nlohmann::json::array();
  for (std::size_t i = 0; i < slots_.size(); ++i)
    slots.push_back({{"name", slots_[i]}, {"delexicalize", bool(delexicalizable_[i])}});
  return {{"acts", acts_}, {"slots", slots}};
}

void DomainSchema::merge(const DomainSchema& other) {
  for (const auto& a : other.acts_)
    if (!act_index(a)) acts_.push_back(a);
  for (std::size_t i = 0; i < other.slots_.size(); ++i) {
    const auto& s = other.slots_[i];
    if (auto idx = slot_index(s)) {
      if (delexicalizable_[*idx] != other.delexicalizable_[i])
        throw SchemaError("slot '" + s + "' has conflicting delexicalize flags");
    } else {
      slots_.push_back(s);
      delexicalizable_.push_back(other.delexicalizable_[i]);
    }
  }
}

std::optional<int> DomainSchema::act_index(const std::string& act) const {
  auto it = std::find(acts_.begin(), acts_.end(), act);
  if (it == acts_.end()) return std::nullopt;
  return static_cast<int>(it - acts_.begin());
}

std::optional<int> DomainSchema::slot_index(const std::string& slot) const {
  auto it = std::find(slots_.begin(), slots_.end(), slot);
  if (it == slots_.end()) return std::nullopt;
  return static_cast<int>(it - slots_.begin());
}

bool DomainSchema::is_delexicalizable(const std::string& slot) const {
  auto idx = slot_index(slot);
  return idx && delexicalizable_[*idx];
}

std::vector<std::string> DomainSchema::feature_names() const {
  std::vector<std::string> names;
  for (const auto& a : acts_) names.push_back("act:" + a);
  for (const auto& s : slots_) names.push_back("slot:" + s);
  return names;
}

DaFeatureVector encode_da_features(const DialogueAct& da,
                                   const DomainSchema& schema) {
  DaFeatureVector f{Vector::Zero(schema.feature_size())};
  auto act = schema.act_index(da.act);
  if (!act) throw SchemaError("act type '" + da.act + "' not in schema");
  f.bits(*act) = 1.0;
  const int offset = static_cast<int>(schema.acts().size());
  for (const auto& p : da.pairs) {
    auto slot = schema.slot_index(p.slot);
    if (!slot) throw SchemaError("slot '" + p.slot + "' not in schema");
    f.bits(offset + *slot) = 1.0;
  }
  return f;
}

bool is_delexicalized_pair(const SlotValue& pair, const DomainSchema* schema) {
  if (pair.kind != ValueKind::kText) return false;
  return schema == nullptr || schema->is_delexicalizable(pair.slot);
}

// ---------------------------------------------------------------------------
// Text

std::vector<std::string> tokenize(std::string_view text) {
  std::string padded;
  padded.reserve(text.size() * 2);
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
    const bool between_digits =
        (c == '.' || c == ',') && i > 0 && i + 1 < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(text[i + 1]));
    if (is_punct_to_pad(c) && !between_digits) {
      padded += ' ';
      padded += c;
      padded += ' ';
    } else {
      padded += c;
    }
  }
  std::vector<std::string> tokens;
  std::istringstream in(padded);
  for (std::string t; in >> t;) tokens.push_back(t);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string slot_token(const std::string& slot) { return "SLOT_" + upper(slot); }

bool is_slot_token(std::string_view token) {
  return token.size() > 5 && token.substr(0, 5) == "SLOT_";
}

std::string slot_of_token(std::string_view token) {
  return is_slot_token(token) ? lower(token.substr(5)) : std::string();
}

DelexicalizedUtterance delexicalize(std::string_view text, const DialogueAct& da,
                                    const DomainSchema* schema) {
  const std::vector<std::string> tokens = tokenize(text);

  struct Candidate {
    std::size_t pair;
    std::vector<std::string> value_tokens;
    std::size_t chars;
  };
  std::vector<Candidate> cands;
  for (std::size_t i = 0; i < da.pairs.size(); ++i) {
    const auto& p = da.pairs[i];
    if (!is_delexicalized_pair(p, schema)) continue;
    auto vt = tokenize(p.value);
    if (vt.empty()) continue;
    cands.push_back({i, vt, join_tokens(vt).size()});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.value_tokens.size() != b.value_tokens.size())
      return a.value_tokens.size() > b.value_tokens.size();
    return a.chars > b.chars;
  });

  // span_pair[i] = index of the pair whose value starts at token i.
  std::vector<bool> used(tokens.size(), false);
  std::vector<long> span_pair(tokens.size(), -1);
  std::vector<std::size_t> span_len(tokens.size(), 0);
  for (const auto& c : cands) {
    const std::size_t n = c.value_tokens.size();
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < n && ok; ++k)
        ok = !used[i + k] && tokens[i + k] == c.value_tokens[k];
      if (!ok) continue;
      for (std::size_t k = 0; k < n; ++k) used[i + k] = true;
      span_pair[i] = static_cast<long>(c.pair);
      span_len[i] = n;
      break;
    }
  }

  DelexicalizedUtterance out;
  std::vector<std::size_t> position(da.pairs.size(), SlotOccurrence::npos);
  for (std::size_t i = 0; i < tokens.size();) {
    if (span_pair[i] >= 0) {
      const auto& p = da.pairs[static_cast<std::size_t>(span_pair[i])];
      position[static_cast<std::size_t>(span_pair[i])] = out.tokens.size();
      out.tokens.push_back(slot_token(p.slot));
      i += span_len[i];
    } else {
      out.tokens.push_back(tokens[i]);
      ++i;
    }
  }
  for (std::size_t i = 0; i < da.pairs.size(); ++i) {
    const auto& p = da.pairs[i];
    if (!is_delexicalized_pair(p, schema)) continue;
    out.occurrences.push_back({p.slot, p.value, position[i]});
  }
  return out;
}

std::string lexicalize(const std::vector<std::string>& tokens,
                       const DialogueAct& da, const DomainSchema* schema,
                       int* unfilled) {
  std::map<std::string, std::vector<std::string>> pending;
  for (const auto& p : da.pairs)
    if (is_delexicalized_pair(p, schema)) pending[p.slot].push_back(p.value);
  std::map<std::string, std::size_t> consumed;

  int missing = 0;
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string word = tokens[i];
    if (is_slot_token(word)) {
      const std::string slot = slot_of_token(word);
      auto it = pending.find(slot);
      std::size_t& k = consumed[slot];
      if (it != pending.end() && k < it->second.size()) {
        word = it->second[k++];
      } else {
        ++missing;
      }
    }
    if (i) out += ' ';
    out += word;
  }
  if (unfilled) *unfilled = missing;
  return out;
}

// ---------------------------------------------------------------------------
// Vocab

Vocab::Vocab() {
  for (const char* t : {"<pad>", "<s>", "</s>", "<unk>"}) add_token(t);
  add_to(slots_, slot_index_, "<unk>");
  add_to(slots_, slot_index_, "<null>");
  add_to(values_, value_index_, "<unk>");
  add_to(values_, value_index_, "<null>");
}

int Vocab::add_to(std::vector<std::string>& list,
                  std::unordered_map<std::string, int>& index,
                  const std::string& key) {
  auto it = index.find(key);
  if (it != index.end()) return it->second;
  const int id = static_cast<int>(list.size());
  list.push_back(key);
  index.emplace(key, id);
  return id;
}

int Vocab::add_token(const std::string& token) {
  return add_to(tokens_, token_index_, token);
}

Vocab Vocab::build(const DomainSchema& schema,
                   const std::vector<std::vector<std::string>>& sentences,
                   const std::vector<DialogueAct>& das) {
  Vocab v;
  for (const auto& s : schema.slots())
    if (schema.is_delexicalizable(s)) v.add_token(slot_token(s));
  for (const auto& sent : sentences)
    for (const auto& t : sent) v.add_token(t);
  for (const auto& s : schema.slots()) add_to(v.slots_, v.slot_index_, s);
  for (const char* k : {"<absent>", "none", "yes", "no", "dontcare"})
    add_to(v.values_, v.value_index_, k);
  for (const auto& s : schema.slots())
    if (schema.is_delexicalizable(s)) add_to(v.values_, v.value_index_, slot_token(s));
  for (const auto& da : das)
    for (const auto& p : da.pairs)
      add_to(v.values_, v.value_index_, encoder_value_key(p, &schema));
  return v;
}

int Vocab::token_id(const std::string& token) const {
  auto it = token_index_.find(token);
  return it == token_index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(token_id(t));
  return ids;
}

int Vocab::slot_id(const std::string& slot) const {
  auto it = slot_index_.find(slot);
  return it == slot_index_.end() ? kEncUnk : it->second;
}

int Vocab::value_id(const std::string& key) const {
  auto it = value_index_.find(key);
  return it == value_index_.end() ? kEncUnk : it->second;
}

nlohmann::json Vocab::to_json() const {
  return {{"tokens", tokens_}, {"slots", slots_}, {"values", values_}};
}

Vocab Vocab::from_json(const nlohmann::json& j) {
  Vocab v;
  v.tokens_.clear();
  v.token_index_.clear();
  v.slots_.clear();
  v.slot_index_.clear();
  v.values_.clear();
  v.value_index_.clear();
  for (const auto& t : j.at("tokens")) v.add_token(t.get<std::string>());
  for (const auto& t : j.at("slots")) add_to(v.slots_, v.slot_index_, t.get<std::string>());
  for (const auto& t : j.at("values")) add_to(v.values_, v.value_index_, t.get<std::string>());
  if (v.size() < 4 || v.slot_table_size() < 2 || v.value_table_size() < 2)
    throw DataError("vocabulary is missing reserved entries");
  return v;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = fnv1a("");
  for (const auto* list : {&tokens_, &slots_, &values_}) {
    for (const auto& t : *list) {
      h = fnv1a(t, h);
      h = fnv1a(std::string_view("\n", 1), h);
    }
    h = fnv1a(std::string_view("\0", 1), h);
  }
  return h;
}

std::string encoder_value_key(const SlotValue& pair, const DomainSchema* schema) {
  switch (pair.kind) {
    case ValueKind::kAbsent: return "<absent>";
    case ValueKind::kNone: return "none";
    case ValueKind::kYes: return "yes";
    case ValueKind::kNo: return "no";
    case ValueKind::kDontCare: return "dontcare";
    case ValueKind::kText: break;
  }
  if (is_delexicalized_pair(pair, schema)) return slot_token(pair.slot);
  return lower(pair.value);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ralstm
