#ifndef CANSEG_NDIFF_GRAPH_H_
#define CANSEG_NDIFF_GRAPH_H_

#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "canseg/ndiff/tensor.h"
#include "canseg/rng.h"

namespace canseg::ndiff {

// A trainable array with its gradient accumulator.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Ordered, named collection of parameters. Addresses are stable, so layers
// may hold Parameter pointers for the lifetime of the set.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  // Zero-initialized parameter. Names must be unique.
  Parameter& add(const std::string& name, Shape shape);
  // Glorot-uniform initialized: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
  Parameter& add_glorot(const std::string& name, Shape shape, int fan_in, int fan_out,
                        Rng& rng);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  size_t size() const { return params_.size(); }
  size_t scalar_count() const;

  void zero_grad();
  double grad_norm() const;
  void scale_grad(double factor);
  // Rescales gradients so their global L2 norm is at most max_norm.
  // Returns the norm before clipping.
  double clip_grad_norm(double max_norm);

  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, Parameter*> by_name_;
};

class Tape;

// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Tensor& grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records primitive operations for reverse-mode differentiation.
//
// Nodes are appended in evaluation order, so reverse creation order is a
// reverse topological order. Gradients are summed into each node from all of
// its consumers; parameter leaves accumulate straight into Parameter::grad.
// A tape constructed with record = false only evaluates.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  explicit Tape(bool record = true) : record_(record) { nodes_.reserve(1024); }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  // One leaf per parameter per tape.
  Var param(Parameter& p);
  // Row `row` of a rank-2 parameter; its gradient scatters into that row.
  Var lookup(Parameter& table, int row);

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  void backward(Var loss);
  void clear();
  size_t size() const { return nodes_.size(); }

  const Tensor& value(int id) const {
    const Node& n = nodes_[static_cast<size_t>(id)];
    return n.external ? *n.external : n.value;
  }
  // Gradient of a node, allocated as zeros on first access.
  Tensor& grad(int id);
  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Appends an op result. `fn` is kept only if recording and some parent
  // requires a gradient.
  Var push(Tensor value, std::initializer_list<Var> parents, Backward fn);
  Var push(Tensor value, const std::vector<Var>& parents, Backward fn);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    Tensor* grad_target = nullptr;
    bool requires_grad = false;
    Backward backward;
  };

  Var push_node(Node node);

  bool record_;
  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline const Tensor& Var::grad() const { return tape_->grad(id_); }

}  // namespace canseg::ndiff

#endif  // CANSEG_NDIFF_GRAPH_H_
