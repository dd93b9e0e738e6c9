#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ralstm/dataset.hpp"
#include "ralstm/generator.hpp"
#include "ralstm/model.hpp"

namespace ralstm {

enum class L2Mode {
  kEveryNth,     // decay term joins every cadence-th example's own update
  kAccumulated,  // gradients summed over cadence examples, one update with decay
};

std::string to_string(L2Mode m);
L2Mode parse_l2_mode(const std::string& s);

struct TrainConfig {
  int hidden = 80;
  double learning_rate = 0.1;
  double lr_decay = 0.5;
  double l2 = 1e-5;
  int l2_cadence = 5;
  L2Mode l2_mode = L2Mode::kEveryNth;
  double dropout = 0.7;
  int max_epochs = 100;
  int patience = 5;
  std::uint64_t seed = 1;
  CellVariant variant = CellVariant::kFull;
  double grad_clip = 5.0;
  double init_scale = 0.08;
  bool shuffle = true;
  // Beam width used for validation BLEU each epoch (1 = greedy).
  int validation_beam = 1;

  std::vector<std::string> problems() const;
};

// Validation loss monitor. update() returns true when the loss improved.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);
  bool update(double loss);
  bool should_stop() const { return bad_epochs_ >= patience_; }
  int bad_epochs() const { return bad_epochs_; }
  double best() const { return best_; }

 private:
  int patience_;
  int bad_epochs_ = 0;
  double best_;
  bool seen_ = false;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;       // per token
  double validation_loss = 0.0;  // per token, no dropout
  double validation_bleu = 0.0;
  double learning_rate = 0.0;    // rate used during this epoch
  long clamped_logs = 0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int stopped_epoch = 0;
  int best_epoch = 0;
  double best_validation_bleu = 0.0;
  std::string checkpoint_path;
  long updates = 0;
  long l2_updates = 0;
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Called for every parameter update; `l2` tells whether decay joined it.
  std::function<void(long update, bool l2)> on_update;
  // Written with the best model after training (and on divergence).
  std::string checkpoint_path;
};

// Delexicalizes `examples` and maps them to decoder ids.
struct PreparedExample {
  DialogueAct da;
  std::vector<int> ids;
};
std::vector<PreparedExample> prepare(const Model& model,
                                     const std::vector<Example>& examples);

// Vocabulary from the delexicalized training split.
Vocab build_vocab(const DomainSchema& schema, const std::vector<Example>& train);

Model create_model(const DomainSchema& schema, const CorpusSplits& splits,
                   const TrainConfig& config);

// Per-token teacher-forced loss without dropout.
double mean_loss(const Model& model, const std::vector<PreparedExample>& data);

// SGD with batch size 1. Leaves the model at the epoch with the highest
// validation BLEU. A non-finite loss or gradient restores that snapshot,
// writes it to hooks.checkpoint_path and throws NumericError.
TrainReport train(Model& model, const CorpusSplits& splits, const TrainConfig& config,
                  const TrainHooks& hooks = {});

void write_train_log(std::ostream& out, const EpochRecord& r);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainReport report;
  EvalReport test;
  std::string checkpoint_path;
};

struct MultiSeedReport {
  std::vector<SeedRun> runs;
  int selected = 0;  // argmax of best validation BLEU, first on ties
  double mean_test_bleu = 0.0;
  double max_test_bleu = 0.0;
  double mean_test_err = 0.0;       // corpus-level
  double mean_test_err_mean = 0.0;  // per-DA mean
};

// Runs seeds config.seed .. config.seed + k - 1. When run_dir is set each
// run's checkpoint goes to run_dir/seed-<s>/model.ckpt.
MultiSeedReport run_multi_seed(const DomainSchema& schema, const CorpusSplits& splits,
                               const TrainConfig& config, int k,
                               const BeamConfig& test_beam,
                               const std::string& run_dir = "",
                               const std::function<void(const std::string&)>& log = {});

// Tab-separated, one row per run, then "selected" and "mean"/"max" rows.
void write_multi_seed_report(std::ostream& out, const MultiSeedReport& r);
// Re-reads a report written above; returns per-run validation BLEU and the
// recorded selection index.
std::pair<std::vector<double>, int> read_multi_seed_selection(std::istream& in);

}  // namespace ralstm
