// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "wsddn/autodiff/parameters.hpp"
#include "wsddn/autodiff/tensor.hpp"

namespace wsddn::ad {

class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  Graph& graph() const { return *graph_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return graph_ != nullptr; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* g, std::size_t id) : graph_(g), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

/// Name -> Var lookup for parameters bound into a graph.
class ParameterVars {
 public:
  Var operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return vars_.count(name) != 0; }
  void insert(const std::string& name, Var v) { vars_[name] = v; }

 private:
  std::map<std::string, Var> vars_;
};

/// Tape of primitive operations in topological order. Built once per
/// forward pass; backward() walks it in reverse.
///
/// Not copyable or movable: Vars refer to their graph by address.
class Graph {
 public:
  /// Propagates the gradient of node `self` into its inputs. Implementations
  /// must only touch input gradients for which requires_grad() is true.
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Named leaf that receives a gradient.
  Var parameter(std::string name, Tensor value);
  /// Binds every entry of `params` as a parameter leaf.
  ParameterVars bind(const ParameterSet& params);

  /// Appends an operation node. Inputs must already exist in this graph.
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  /// Gradient accumulator of a node, allocated zeroed on first use.
  std::span<double> grad(std::size_t id) { return nodes_.at(id).value.grad(); }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }

  /// Reverse-mode sweep from a single-element loss node. Previous gradients
  /// are discarded.
  void backward(Var loss);

  /// Gradient of `v` after backward(); zeros if `v` was not reached.
  Tensor gradient(Var v) const;

  /// Gradients of every parameter leaf, in binding order.
  ParameterSet parameter_gradients() const;

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    std::string name;  // parameters only
  };

  std::vector<Node> nodes_;
  std::vector<std::size_t> parameter_ids_;
};

}  // namespace wsddn::ad
