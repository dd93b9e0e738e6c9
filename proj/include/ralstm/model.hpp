#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "ralstm/autodiff.hpp"
#include "ralstm/cell.hpp"
#include "ralstm/checkpoint.hpp"
#include "ralstm/corpus.hpp"
#include "ralstm/encoder.hpp"

namespace ralstm {

// Encoder, aligner and RALSTM decoder parameters together with the schema and
// vocabulary they were built for.
class Model {
 public:
  Model(DomainSchema schema, Vocab vocab, int hidden, CellVariant variant);

  // uniform(-scale, scale) for every matrix, zero biases, +1 on the
  // forget-gate block of each LSTM bias. Deterministic in `seed`.
  void initialize(std::uint64_t seed, double scale = 0.08);

  const DomainSchema& schema() const { return schema_; }
  const Vocab& vocab() const { return vocab_; }
  int hidden() const { return hidden_; }
  int feature_size() const { return schema_.feature_size(); }
  CellVariant variant() const { return variant_; }
  void set_variant(CellVariant v) { variant_ = v; }

  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  nlohmann::json header() const;
  void save(const std::string& path) const;
  std::string serialize() const;
  // Throws DataError when the stored vocabulary hash does not match the
  // stored vocabulary or a tensor is missing or misshapen.
  static Model load(const std::string& path);
  static Model from_checkpoint(const Checkpoint& ck);

  // Overwrites decoder token embeddings from a whitespace-separated text
  // file (token followed by `hidden` floats). Returns rows replaced.
  int load_embeddings(const std::string& path);

 private:
  void create_parameters();

  DomainSchema schema_;
  Vocab vocab_;
  int hidden_;
  CellVariant variant_;
  ParameterSet params_;
};

struct BoundModel {
  EncoderParams enc;
  DecoderParams dec;
};

// Trainable binding: backward() accumulates into the model's gradients.
BoundModel bind(Graph& g, Model& model);
// Frozen binding for inference.
BoundModel bind(Graph& g, const Model& model);

struct EncodedDa {
  EncodedSequence sequence;
  AttentionMemory memory;
  Var act;  // n x 1 act-type embedding
  Var s0;   // binary DA feature vector
  int unknown_pairs = 0;
};

EncodedDa encode_da(Graph& g, const BoundModel& bound, const Model& model,
                    const DialogueAct& da);

// -sum_t log softmax(logits_t)[target_t]; log is floored at 1e-12.
Var sequence_nll(Graph& g, const std::vector<Var>& logits,
                 const std::vector<int>& targets);

struct DropoutSpec {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;
};

// Teacher-forced NLL: inputs BOS + tokens, targets tokens + EOS.
struct SequenceLoss {
  Var loss;
  std::vector<Var> logits;
  int steps = 0;
};
SequenceLoss sequence_loss(Graph& g, const BoundModel& bound, const Model& model,
                           const DialogueAct& da, const std::vector<int>& tokens,
                           const DropoutSpec& dropout = {});

struct DecoderState {
  Vector h;
  Vector c;
  Vector s;
};

// Inference over a fixed model and DA. step() is pure: the same state and
// token always give the same result.
class DecoderSession {
 public:
  DecoderSession(const Model& model, const DialogueAct& da);

  DecoderState initial_state() const;

  struct Step {
    DecoderState state;
    Vector log_probs;
    Vector attention;
  };
  Step step(const DecoderState& state, int token) const;

  // Sum of -log p over `tokens` (no BOS/EOS added), fed from BOS.
  double score(const std::vector<int>& tokens) const;

 private:
  const Model& model_;
  std::vector<Tensor> states_;
  std::vector<Tensor> projected_;
  Tensor act_;
  Vector s0_;
};

// Decoder-side tokens never proposed during generation.
bool is_generatable(int token);

}  // namespace ralstm
