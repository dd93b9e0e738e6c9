#include "ralstm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ralstm {

namespace {

Tensor stable_sigmoid(const Tensor& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

std::string shape_of(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kInput: return "input";
    case OpKind::kParameter: return "parameter";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kCMul: return "cmul";
    case OpKind::kConcat: return "concat";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kSum: return "sum";
    case OpKind::kScale: return "scale";
    case OpKind::kLog: return "log";
    case OpKind::kNegate: return "negate";
    case OpKind::kSelectRow: return "select_row";
    case OpKind::kSlice: return "slice";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// ParameterSet

ParameterSet::ParameterSet(const ParameterSet& other)
    : params_(other.params_), index_(other.index_) {}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
  params_ = other.params_;
  index_ = other.index_;
  return *this;
}

Parameter& ParameterSet::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw Error("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  Tensor grad = Tensor::Zero(value.rows(), value.cols());
  params_.push_back(Parameter{name, std::move(value), std::move(grad)});
  return params_.back();
}

Parameter& ParameterSet::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return params_[it->second];
}

const Parameter& ParameterSet::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter '" + name + "'");
  return params_[it->second];
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.grad.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

// ---------------------------------------------------------------------------
// Graph construction

Var Graph::record(Node node) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(std::move(node));
  Node& n = nodes_.back();
  if (n.kind != OpKind::kInput && n.kind != OpKind::kParameter) evaluate(n);
  check(n, id);
  return Var{id};
}

const Tensor& Graph::val(int id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.value;
}

const Tensor& Graph::value(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw Error("invalid node id " + std::to_string(v.id));
  return val(v.id);
}

const Tensor& Graph::grad(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw Error("invalid node id " + std::to_string(v.id));
  return nodes_[v.id].grad;
}

std::string Graph::describe(int id) const {
  std::ostringstream os;
  os << "node " << id << " (" << op_name(nodes_[id].kind) << ", "
     << shape_of(val(id)) << ")";
  return os.str();
}

void Graph::check(const Node& node, int id) const {
  if (!check_finite_) return;
  const Tensor& v = node.external ? *node.external : node.value;
  if (!v.allFinite())
    throw NumericError("non-finite value at " + describe(id), id);
}

Var Graph::input(Tensor value) {
  Node n{OpKind::kInput, {}, std::move(value), {}};
  return record(std::move(n));
}

Var Graph::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) {
    nodes_[it->second].trainable = &p;
    return Var{it->second};
  }
  Node n{OpKind::kParameter, {}, {}, {}};
  n.external = &p.value;
  n.trainable = &p;
  Var v = record(std::move(n));
  param_nodes_[&p] = v.id;
  return v;
}

Var Graph::param(const Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var{it->second};
  Node n{OpKind::kParameter, {}, {}, {}};
  n.external = &p.value;
  Var v = record(std::move(n));
  param_nodes_[&p] = v.id;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  const Tensor& x = value(a);
  const Tensor& y = value(b);
  if (x.cols() != y.rows())
    throw ShapeError("matmul: " + describe(a.id) + " incompatible with " +
                     describe(b.id));
  return record(Node{OpKind::kMatMul, {a.id, b.id}, {}, {}});
}

Var Graph::add(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ShapeError("add: " + describe(a.id) + " incompatible with " +
                     describe(b.id));
  return record(Node{OpKind::kAdd, {a.id, b.id}, {}, {}});
}

Var Graph::cmul(Var a, Var b) {
  if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
    throw ShapeError("cmul: " + describe(a.id) + " incompatible with " +
                     describe(b.id));
  return record(Node{OpKind::kCMul, {a.id, b.id}, {}, {}});
}

Var Graph::concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  std::vector<int> ids;
  for (Var p : parts) {
    if (value(p).cols() != 1)
      throw ShapeError("concat: " + describe(p.id) + " is not a column vector");
    ids.push_back(p.id);
  }
  return record(Node{OpKind::kConcat, std::move(ids), {}, {}});
}

Var Graph::sigmoid(Var a) {
  value(a);
  return record(Node{OpKind::kSigmoid, {a.id}, {}, {}});
}

Var Graph::tanh(Var a) {
  value(a);
  return record(Node{OpKind::kTanh, {a.id}, {}, {}});
}

Var Graph::softmax(Var a) {
  if (value(a).cols() != 1)
    throw ShapeError("softmax: " + describe(a.id) + " is not a column vector");
  return record(Node{OpKind::kSoftmax, {a.id}, {}, {}});
}

Var Graph::sum(Var a) {
  value(a);
  return record(Node{OpKind::kSum, {a.id}, {}, {}});
}

Var Graph::scale(Var a, double factor) {
  value(a);
  Node n{OpKind::kScale, {a.id}, {}, {}};
  n.factor = factor;
  return record(std::move(n));
}

Var Graph::log(Var a, double floor) {
  value(a);
  Node n{OpKind::kLog, {a.id}, {}, {}};
  n.factor = floor;
  return record(std::move(n));
}

Var Graph::negate(Var a) {
  value(a);
  return record(Node{OpKind::kNegate, {a.id}, {}, {}});
}

Var Graph::select_row(Var a, int row) {
  if (row < 0 || row >= value(a).rows())
    throw ShapeError("select_row: row " + std::to_string(row) +
                     " out of range for " + describe(a.id));
  Node n{OpKind::kSelectRow, {a.id}, {}, {}};
  n.index = row;
  return record(std::move(n));
}

Var Graph::slice(Var a, int begin, int count) {
  const Tensor& x = value(a);
  if (x.cols() != 1 || begin < 0 || count <= 0 || begin + count > x.rows())
    throw ShapeError("slice: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") invalid for " +
                     describe(a.id));
  Node n{OpKind::kSlice, {a.id}, {}, {}};
  n.index = begin;
  n.count = count;
  return record(std::move(n));
}

// ---------------------------------------------------------------------------
// Evaluation

void Graph::evaluate(Node& n) {
  const auto& p = n.parents;
  switch (n.kind) {
    case OpKind::kInput:
    case OpKind::kParameter:
      break;
    case OpKind::kMatMul:
      n.value.noalias() = val(p[0]) * val(p[1]);
      break;
    case OpKind::kAdd:
      n.value = val(p[0]) + val(p[1]);
      break;
    case OpKind::kCMul:
      n.value = val(p[0]).cwiseProduct(val(p[1]));
      break;
    case OpKind::kConcat: {
      Eigen::Index rows = 0;
      for (int id : p) rows += val(id).rows();
      n.value.resize(rows, 1);
      Eigen::Index at = 0;
      for (int id : p) {
        const Tensor& part = val(id);
        n.value.middleRows(at, part.rows()) = part;
        at += part.rows();
      }
      break;
    }
    case OpKind::kSigmoid:
      n.value = stable_sigmoid(val(p[0]));
      break;
    case OpKind::kTanh:
      n.value = val(p[0]).array().tanh().matrix();
      break;
    case OpKind::kSoftmax: {
      const Tensor& x = val(p[0]);
      const double mx = x.maxCoeff();
      n.value = (x.array() - mx).exp().matrix();
      n.value /= n.value.sum();
      break;
    }
    case OpKind::kSum:
      n.value = Tensor::Constant(1, 1, val(p[0]).sum());
      break;
    case OpKind::kScale:
      n.value = n.factor * val(p[0]);
      break;
    case OpKind::kLog: {
      const double floor = n.factor;
      n.value = val(p[0]).unaryExpr([&](double v) {
        if (floor > 0.0 && v <= floor) {
          ++clamped_logs_;
          return std::log(floor);
        }
        return std::log(v);
      });
      break;
    }
    case OpKind::kNegate:
      n.value = -val(p[0]);
      break;
    case OpKind::kSelectRow:
      n.value = val(p[0]).row(n.index).transpose();
      break;
    case OpKind::kSlice:
      n.value = val(p[0]).middleRows(n.index, n.count);
      break;
  }
}

void Graph::forward() {
  clamped_logs_ = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    evaluate(n);
    check(n, static_cast<int>(i));
  }
}

// ---------------------------------------------------------------------------
// Backward

void Graph::backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ShapeError("backward: loss " + describe(loss.id) + " is not scalar");

  for (auto& n : nodes_) n.grad.resize(0, 0);
  auto grad_of = [&](int id) -> Tensor& {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) {
      const Tensor& v = val(id);
      n.grad = Tensor::Zero(v.rows(), v.cols());
    }
    return n.grad;
  };
  grad_of(loss.id)(0, 0) = 1.0;

  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) continue;
    const Tensor& g = n.grad;
    const auto& p = n.parents;
    switch (n.kind) {
      case OpKind::kInput:
        break;
      case OpKind::kParameter:
        if (n.trainable) n.trainable->grad += g;
        break;
      case OpKind::kMatMul:
        grad_of(p[0]).noalias() += g * val(p[1]).transpose();
        grad_of(p[1]).noalias() += val(p[0]).transpose() * g;
        break;
      case OpKind::kAdd:
        grad_of(p[0]) += g;
        grad_of(p[1]) += g;
        break;
      case OpKind::kCMul:
        grad_of(p[0]) += g.cwiseProduct(val(p[1]));
        grad_of(p[1]) += g.cwiseProduct(val(p[0]));
        break;
      case OpKind::kConcat: {
        Eigen::Index at = 0;
        for (int pid : p) {
          const Eigen::Index rows = val(pid).rows();
          grad_of(pid) += g.middleRows(at, rows);
          at += rows;
        }
        break;
      }
      case OpKind::kSigmoid:
        grad_of(p[0]).array() +=
            g.array() * n.value.array() * (1.0 - n.value.array());
        break;
      case OpKind::kTanh:
        grad_of(p[0]).array() +=
            g.array() * (1.0 - n.value.array().square());
        break;
      case OpKind::kSoftmax: {
        const double dot = g.cwiseProduct(n.value).sum();
        grad_of(p[0]).array() += n.value.array() * (g.array() - dot);
        break;
      }
      case OpKind::kSum:
        grad_of(p[0]).array() += g(0, 0);
        break;
      case OpKind::kScale:
        grad_of(p[0]) += n.factor * g;
        break;
      case OpKind::kLog: {
        const Tensor& x = val(p[0]);
        Tensor& gx = grad_of(p[0]);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (n.factor > 0.0 && x(i) <= n.factor) continue;
          gx(i) += g(i) / x(i);
        }
        break;
      }
      case OpKind::kNegate:
        grad_of(p[0]) -= g;
        break;
      case OpKind::kSelectRow:
        grad_of(p[0]).row(n.index) += g.transpose();
        break;
      case OpKind::kSlice:
        grad_of(p[0]).middleRows(n.index, n.count) += g;
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Optimisation helpers

void sgd_step(ParameterSet& params, double learning_rate, double l2,
              bool apply_l2) {
  for (const auto& p : params) {
    if (!p.grad.allFinite())
      throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }
  for (auto& p : params) {
    if (apply_l2 && l2 != 0.0) {
      p.value -= learning_rate * (p.grad + l2 * p.value);
    } else {
      p.value -= learning_rate * p.grad;
    }
    p.grad.setZero();
  }
}

double clip_gradients(ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) sq += p.grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& p : params) p.grad *= s;
  }
  return norm;
}

GradCheckResult grad_check(ParameterSet& params, const LossBuilder& builder,
                           const GradCheckOptions& options,
                           const std::function<void(ParameterSet&)>& tamper) {
  const double h = options.epsilon;
  params.zero_grad();
  {
    Graph g(true);
    Var loss = builder(g, params);
    g.backward(loss);
  }
  if (tamper) tamper(params);

  auto eval_loss = [&]() {
    Graph g(true);
    return g.scalar(builder(g, params));
  };

  GradCheckResult result;
  for (auto& p : params) {
    for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
      for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
        const double saved = p.value(r, c);
        auto at = [&](double offset) {
          p.value(r, c) = saved + offset;
          return eval_loss();
        };
        double numeric;
        if (options.fourth_order) {
          const double d1 = at(h) - at(-h);
          const double d2 = at(2 * h) - at(-2 * h);
          numeric = (8.0 * d1 - d2) / (12.0 * h);
        } else {
          numeric = (at(h) - at(-h)) / (2.0 * h);
        }
        p.value(r, c) = saved;

        const double analytic = p.grad(r, c);
        const double denom =
            std::max({std::abs(analytic), std::abs(numeric), options.floor});
        const double rel = std::abs(analytic - numeric) / denom;
        ++result.checked;
        if (rel > result.max_relative_error || result.worst_parameter.empty()) {
          result.max_relative_error = rel;
          result.worst_parameter = p.name;
          result.worst_row = r;
          result.worst_col = c;
          result.analytic = analytic;
          result.numeric = numeric;
        }
      }
    }
  }
  params.zero_grad();
  return result;
}

}  // namespace ralstm
