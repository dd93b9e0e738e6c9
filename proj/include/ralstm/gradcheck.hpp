#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ralstm/autodiff.hpp"
#include "ralstm/model.hpp"

namespace ralstm {

struct GradCheckDims {
  int hidden = 4;   // n, at most kMaxGradCheckHidden
  int pairs = 3;    // L, slot-value pairs in the DA
  int length = 3;   // T, target tokens before EOS
  int vocab = 12;   // decoder vocabulary size including specials
  std::uint64_t seed = 1;
  double init_scale = 0.5;
  double dropout = 0.3;  // fixed masks, identical in every evaluation
  double epsilon = 1e-4;
  bool fourth_order = true;
  double floor = 1e-6;

  std::vector<std::string> problems() const;
};

inline constexpr int kMaxGradCheckHidden = 8;

// A small random model, DA and target sequence of the requested size.
struct ToyProblem {
  Model model;
  DialogueAct da;
  std::vector<int> tokens;
};
ToyProblem make_toy_problem(const GradCheckDims& dims, CellVariant variant);

// Finite-difference check of every parameter of the full encoder, aligner
// and decoder stack on the teacher-forced sequence loss.
GradCheckResult model_gradcheck(const GradCheckDims& dims, CellVariant variant,
                                const std::function<void(ParameterSet&)>& tamper = {});

}  // namespace ralstm
