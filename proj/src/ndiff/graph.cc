#include "canseg/ndiff/graph.h"

#include <cmath>

#include "canseg/errors.h"

namespace canseg::ndiff {

Parameter& ParameterSet::add(const std::string& name, Shape shape) {
  if (by_name_.count(name)) throw InvalidArgument("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor(shape);
  p->grad = Tensor(std::move(shape));
  Parameter& ref = *p;
  by_name_.emplace(name, p.get());
  params_.push_back(std::move(p));
  return ref;
}

Parameter& ParameterSet::add_glorot(const std::string& name, Shape shape, int fan_in,
                                    int fan_out, Rng& rng) {
  Parameter& p = add(name, std::move(shape));
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : p.value.values()) v = rng.uniform(-a, a);
  return p;
}

Parameter* ParameterSet::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

double ParameterSet::grad_norm() const {
  double sq = 0;
  for (const auto& p : params_) sq += p->grad.flat().squaredNorm();
  return std::sqrt(sq);
}

void ParameterSet::scale_grad(double factor) {
  for (auto& p : params_) p->grad.flat() *= factor;
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm) scale_grad(max_norm / norm);
  return norm;
}

std::vector<Tensor> ParameterSet::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParameterSet::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw ShapeError("snapshot size mismatch");
  for (size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i]->value))
      throw ShapeError("snapshot shape mismatch for " + params_[i]->name);
    params_[i]->value = values[i];
  }
}

// ---------------------------------------------------------------------------

Var Tape::push_node(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  return push_node(std::move(n));
}

Var Tape::param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.external = &p.value;
  n.grad_target = &p.grad;
  n.requires_grad = record_;
  Var v = push_node(std::move(n));
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::lookup(Parameter& table, int row) {
  if (table.value.rank() != 2 || row < 0 || row >= table.value.rows()) {
    throw ShapeError("lookup row " + std::to_string(row) + " in table of shape " +
                     shape_string(table.value.shape()));
  }
  const int cols = table.value.cols();
  Tensor out({cols});
  const double* src = table.value.data() + static_cast<size_t>(row) * cols;
  std::copy(src, src + cols, out.data());
  Node n;
  n.value = std::move(out);
  n.requires_grad = record_;
  if (record_) {
    Parameter* tp = &table;
    n.backward = [tp, row, cols](Tape& t, int self) {
      const Tensor& g = t.grad(self);
      double* dst = tp->grad.data() + static_cast<size_t>(row) * cols;
      for (int i = 0; i < cols; ++i) dst[i] += g[static_cast<size_t>(i)];
    };
  }
  return push_node(std::move(n));
}

Var Tape::push(Tensor value, std::initializer_list<Var> parents, Backward fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.tape() != this) throw InvalidArgument("operand belongs to another tape");
      if (nodes_[static_cast<size_t>(p.id())].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return push_node(std::move(n));
}

Var Tape::push(Tensor value, const std::vector<Var>& parents, Backward fn) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& p : parents) {
      if (p.tape() != this) throw InvalidArgument("operand belongs to another tape");
      if (nodes_[static_cast<size_t>(p.id())].requires_grad) n.requires_grad = true;
    }
    if (n.requires_grad) n.backward = std::move(fn);
  }
  return push_node(std::move(n));
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (n.grad_target) return *n.grad_target;
  if (n.grad.empty()) n.grad = Tensor(value(id).shape());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (!record_) throw InvalidArgument("backward on a non-recording tape");
  if (loss.tape() != this) throw InvalidArgument("loss belongs to another tape");
  if (value(loss.id()).size() != 1)
    throw ShapeError("backward needs a scalar loss, got shape " +
                     shape_string(value(loss.id()).shape()));
  if (!requires_grad(loss.id())) return;
  grad(loss.id())[0] += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.backward) continue;
    if (n.grad.empty()) continue;  // unreachable from the loss
    n.backward(*this, id);
  }
}

void Tape::clear() {
  nodes_.clear();
  param_nodes_.clear();
}

}  // namespace canseg::ndiff
