#pragma once

// Tape-based reverse-mode differentiation over dense Eigen matrices.
//
// A Graph is built define-by-run: each op evaluates its value as soon as it
// is recorded, so creation order is a valid topological order. Parameters
// live outside the graph in a ParameterSet and are referenced, not copied.
// Vectors are n x 1 column matrices; scalars are 1 x 1.

#include <Eigen/Dense>

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "ralstm/errors.hpp"

namespace ralstm {

using Tensor = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class OpKind : std::uint8_t {
  kInput,
  kParameter,
  kMatMul,
  kAdd,
  kCMul,
  kConcat,
  kSigmoid,
  kTanh,
  kSoftmax,
  kSum,
  kScale,
  kLog,
  kNegate,
  kSelectRow,
  kSlice,
};

const char* op_name(OpKind kind);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named, ordered registry of trainable tensors. Element addresses are stable
// for the lifetime of the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet& other);
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

  Parameter& add(const std::string& name, Tensor value);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Graph {
 public:
  // With check_finite set, every recorded value is tested and a
  // NumericError naming the node is raised on NaN/Inf.
  explicit Graph(bool check_finite = false) : check_finite_(check_finite) {}

  Var input(Tensor value);
  // Trainable reference: backward() accumulates into p.grad.
  Var param(Parameter& p);
  // Frozen reference: participates in forward only.
  Var param(const Parameter& p);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var cmul(Var a, Var b);
  Var concat(const std::vector<Var>& parts);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var softmax(Var a);
  Var sum(Var a);
  Var scale(Var a, double factor);
  // log(max(x, floor)); entries at or below the floor get zero gradient.
  Var log(Var a, double floor = 0.0);
  Var negate(Var a);
  // Row `row` of a, returned as a column vector (cols x 1).
  Var select_row(Var a, int row);
  // Rows [begin, begin + count) of a column vector.
  Var slice(Var a, int begin, int count);

  const Tensor& value(Var v) const;
  const Tensor& grad(Var v) const;
  double scalar(Var v) const { return value(v)(0, 0); }
  OpKind kind(Var v) const { return nodes_.at(v.id).kind; }
  const std::vector<int>& parents(Var v) const { return nodes_.at(v.id).parents; }
  std::size_t size() const { return nodes_.size(); }

  // Recomputes every derived node from current input and parameter values.
  void forward();
  // Reverse sweep from a 1 x 1 loss; parameter gradients are accumulated.
  void backward(Var loss);

  // Number of log() evaluations that hit their floor.
  int clamped_logs() const { return clamped_logs_; }

 private:
  struct Node {
    OpKind kind;
    std::vector<int> parents;
    Tensor value;
    Tensor grad;
    const Tensor* external = nullptr;
    Parameter* trainable = nullptr;
    double factor = 0.0;
    int index = 0;
    int count = 0;
  };

  Var record(Node node);
  void evaluate(Node& node);
  void check(const Node& node, int id) const;
  const Tensor& val(int id) const;
  std::string describe(int id) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool check_finite_;
  int clamped_logs_ = 0;
};

// p <- p - lr * (g + [apply_l2] * l2 * p), then gradients are zeroed.
// Throws NumericError if any gradient is non-finite.
void sgd_step(ParameterSet& params, double learning_rate, double l2,
              bool apply_l2);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_gradients(ParameterSet& params, double max_norm);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_row = 0;
  Eigen::Index worst_col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

using LossBuilder = std::function<Var(Graph&, ParameterSet&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  // (8(f(x+h) - f(x-h)) - (f(x+2h) - f(x-2h))) / 12h instead of the
  // two-point difference; truncation error O(h^4).
  bool fourth_order = false;
  // Denominator floor. Entries far below the finite-difference noise level
  // are compared absolutely.
  double floor = 1e-8;
};

// Compares backward() against central finite differences for every scalar
// in `params`. Relative error is |a - n| / max(|a|, |n|, floor).
// `tamper`, when set, runs between backward() and the comparison; it exists
// so tests can corrupt gradients and confirm the check fails.
GradCheckResult grad_check(ParameterSet& params, const LossBuilder& builder,
                           const GradCheckOptions& options = {},
                           const std::function<void(ParameterSet&)>& tamper = {});

}  // namespace ralstm
