#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ralstm/dataset.hpp"
#include "ralstm/model.hpp"

namespace ralstm::testing {

std::string source_path(const std::string& rel);
std::string synthetic_dir();
std::string binary_path();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const;

 private:
  std::filesystem::path path_;
};

void write_file(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

// Schema used by most unit tests: acts inform/request/compare, slots
// name/food/area/pricerange/phone (delexicalized) and kidsallowed.
DomainSchema restaurant_schema();

// Random DA over restaurant_schema() with occasional specials, slot-only
// pairs and values needing quotes.
DialogueAct random_da(std::mt19937_64& rng);

// A model over a three-token generatable vocabulary {a, b, </s>}.
Model toy_model(std::uint64_t seed, int hidden = 2, double scale = 1.0,
                CellVariant variant = CellVariant::kFull);

// A small random model over restaurant_schema().
Model small_model(std::uint64_t seed, int hidden = 4,
                  CellVariant variant = CellVariant::kFull, double scale = 0.5);

// Teacher-forced -log p of `ids`, computed from a fresh training graph.
// With `with_eos` the EOS step is included.
double graph_cost(const Model& model, const DialogueAct& da, const std::vector<int>& ids,
                  bool with_eos);

}  // namespace ralstm::testing
