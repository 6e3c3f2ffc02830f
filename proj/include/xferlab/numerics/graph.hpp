#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/numerics/tensor.hpp"

namespace xferlab::numerics {

// Handle to a node of a Graph.
struct Var {
  std::size_t id = 0;
};

// Computation record for reverse-mode differentiation. Nodes are appended in
// evaluation order, so every input of node i has an index below i and a
// reverse sweep visits nodes in a valid adjoint order.
//
// Leaves hold caller-provided tensors; gradients accumulate on leaves across
// backward() calls until zero_grad(). Interior gradients are scratch and are
// cleared at the start of each sweep.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  Var leaf(Tensor t) {
    nodes_.push_back({std::move(t), {}, {}, true});
    return {nodes_.size() - 1};
  }

  Var constant(Tensor t) {
    t.set_requires_grad(false);
    return leaf(std::move(t));
  }

  Var parameter(Tensor t) {
    t.set_requires_grad(true);
    return leaf(std::move(t));
  }

  // Appends the result of a primitive. The backward function is kept only
  // when some input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
  }

  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
    if (!value.all_finite()) {
      throw NumericError("non-finite value produced by primitive at node " + std::to_string(nodes_.size()));
    }
    bool needs = false;
    for (auto in : inputs) needs = needs || nodes_[in.id].value.requires_grad();
    value.set_requires_grad(needs);
    std::vector<std::size_t> ids;
    ids.reserve(inputs.size());
    for (auto in : inputs) ids.push_back(in.id);
    nodes_.push_back({std::move(value), needs ? std::move(fn) : BackwardFn{}, std::move(ids), false});
    return {nodes_.size() - 1};
  }

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].value.requires_grad(); }

  // Adjoint buffer of a node; primitives add into it during backward.
  std::vector<double>& adjoint(std::size_t id) { return nodes_[id].value.grad_buffer(); }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

  // Gradient of a leaf after backward(); empty when none has flowed into it.
  std::span<const double> grad(Var v) const {
    const auto& g = nodes_[v.id].value.grad();
    if (!g) return {};
    return *g;
  }

  void backward(Var output) {
    const auto& out = nodes_[output.id].value;
    if (out.size() != 1) {
      throw ContractError("backward seed must be a scalar, got shape " + shape_string(out.shape()));
    }
    for (std::size_t i = 0; i <= output.id; ++i) {
      if (!nodes_[i].is_leaf) nodes_[i].value.zero_grad();
    }
    if (!out.requires_grad()) return;
    adjoint(output.id)[0] += 1.0;
    for (std::size_t i = output.id + 1; i-- > 0;) {
      auto& node = nodes_[i];
      if (node.is_leaf || !node.backward || !node.value.grad()) continue;
      node.backward(*this, i);
    }
  }

  void zero_grad() {
    for (auto& n : nodes_) n.value.zero_grad();
  }

  // Discards every node appended after `mark`; lets one graph with fixed
  // parameter leaves evaluate many inputs.
  std::size_t mark() const { return nodes_.size(); }
  void rewind(std::size_t mark) { nodes_.resize(mark); }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    BackwardFn backward;
    std::vector<std::size_t> inputs;
    bool is_leaf = false;
  };
  std::vector<Node> nodes_;
};

}  // namespace xferlab::numerics
