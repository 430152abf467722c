// SPDX-License-Identifier: Apache-2.0
#include "wsddn/autodiff/graph.hpp"

#include <algorithm>

#include "wsddn/common/error.hpp"

namespace wsddn::ad {

const Tensor& Var::value() const {
  if (!graph_) throw UsageError("use of an unbound Var");
  return graph_->value(id_);
}

Var ParameterVars::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw UsageError("parameter '" + name + "' is not bound in this graph");
  return it->second;
}

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, false, {}});
  return Var(this, nodes_.size() - 1);
}

Var Graph::parameter(std::string name, Tensor value) {
  for (auto id : parameter_ids_) {
    if (nodes_[id].name == name) throw UsageError("parameter '" + name + "' bound twice");
  }
  value.drop_grad();
  nodes_.push_back(Node{std::move(value), {}, nullptr, true, std::move(name)});
  parameter_ids_.push_back(nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

ParameterVars Graph::bind(const ParameterSet& params) {
  ParameterVars vars;
  for (const auto& e : params) vars.insert(e.name, parameter(e.name, e.value));
  return vars;
}

Var Graph::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  bool needs = false;
  for (auto id : inputs) {
    if (id >= nodes_.size()) throw UsageError("operation input refers to a later node");
    needs = needs || nodes_[id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::move(inputs), needs ? std::move(backward) : nullptr,
                        needs, {}});
  return Var(this, nodes_.size() - 1);
}

void Graph::backward(Var loss) {
  if (loss.graph_ != this) throw UsageError("loss belongs to a different graph");
  const auto root = loss.id();
  if (nodes_.at(root).value.size() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " +
                     shape_string(nodes_[root].value.shape()));
  }
  for (auto& n : nodes_) n.value.drop_grad();
  if (!nodes_[root].requires_grad) return;

  nodes_[root].value.grad()[0] = 1.0;
  for (std::size_t i = root + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (!n.backward || !n.value.has_grad()) continue;
    n.backward(*this, i);
  }
}

Tensor Graph::gradient(Var v) const {
  const auto& t = nodes_.at(v.id()).value;
  if (!t.has_grad()) return Tensor(t.shape(), 0.0);
  const auto g = t.grad();
  return Tensor(t.shape(), std::vector<double>(g.begin(), g.end()));
}

ParameterSet Graph::parameter_gradients() const {
  ParameterSet out;
  for (auto id : parameter_ids_) out.add(nodes_[id].name, gradient(Var(const_cast<Graph*>(this), id)));
  return out;
}

}  // namespace wsddn::ad
