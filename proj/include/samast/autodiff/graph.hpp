#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "samast/core/error.hpp"
#include "samast/core/tensor.hpp"

namespace samast::ad {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  std::size_t id() const { return id_; }
  Graph& graph() const { return *graph_; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;

 private:
  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

// Dynamic tape. Nodes are appended in evaluation order, so insertion order is
// a topological order and backward is a single reverse sweep.
class Graph {
 public:
  // Accumulates the node's gradient into its inputs' gradients.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  struct Node {
    const char* op;
    std::vector<std::size_t> inputs;
    Tensor value;
    Tensor grad;  // empty until touched by backward
    bool requires_grad;
    BackwardFn backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value) {
    return push(Node{"constant", {}, std::move(value), {}, false, {}});
  }

  Var parameter(Tensor value) {
    return push(Node{"parameter", {}, std::move(value), {}, true, {}});
  }

  // Records an operation result. The node requires grad iff any input does.
  Var record(const char* op, std::vector<std::size_t> inputs, Tensor value,
             BackwardFn backward) {
    bool rg = false;
    for (std::size_t in : inputs) {
      if (in >= nodes_.size()) throw ContractError("input node does not precede its consumer");
      rg = rg || nodes_[in].requires_grad;
    }
    if (!rg) backward = nullptr;
    return push(Node{op, std::move(inputs), std::move(value), {}, rg, std::move(backward)});
  }

  std::size_t size() const { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_[id]; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Gradient buffer of a node, allocated on first use.
  Tensor& grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
  }

  const Tensor& upstream(std::size_t id) const { return nodes_[id].grad; }

  // Reverse accumulation from a scalar loss. Repeated calls accumulate.
  void backward(Var loss) {
    if (loss.value().size() != 1) {
      throw ContractError("backward needs a scalar loss, got shape " +
                          shape_string(loss.shape()));
    }
    grad_buffer(loss.id())[0] += 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.backward && !n.grad.empty()) n.backward(*this, i);
    }
  }

  // Gradient with respect to a node; zeros when the node was unreachable.
  Tensor grad(Var v) const {
    const Node& n = nodes_[v.id()];
    return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
  }

  std::map<std::size_t, Tensor> gradients(const std::vector<Var>& vars) const {
    std::map<std::size_t, Tensor> out;
    for (const Var& v : vars) out.emplace(v.id(), grad(v));
    return out;
  }

  void zero_grad() {
    for (Node& n : nodes_) n.grad = Tensor();
  }

 private:
  Var push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return graph_->value(id_); }
inline bool Var::requires_grad() const { return graph_->requires_grad(id_); }

}  // namespace samast::ad
