// SPDX-License-Identifier: Apache-2.0
#include "wsddn/autodiff/parameters.hpp"

#include "wsddn/common/error.hpp"

namespace wsddn::ad {

void ParameterSet::add(std::string name, Tensor value) {
  if (contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  entries_.push_back({std::move(name), std::move(value)});
}

void ParameterSet::set(std::string_view name, Tensor value) {
  if (auto* e = find(name)) {
    const_cast<Entry*>(e)->value = std::move(value);
    return;
  }
  entries_.push_back({std::string(name), std::move(value)});
}

const ParameterSet::Entry* ParameterSet::find(std::string_view name) const noexcept {
  for (const auto& e : entries_) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

bool ParameterSet::contains(std::string_view name) const noexcept { return find(name) != nullptr; }

Tensor& ParameterSet::at(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).at(name));
}

const Tensor& ParameterSet::at(std::string_view name) const {
  if (auto* e = find(name)) return e->value;
  throw UsageError("unknown parameter '" + std::string(name) + "'");
}

std::size_t ParameterSet::element_count() const noexcept {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  for (const auto& e : entries_) out.add(e.name, Tensor(e.value.shape(), 0.0));
  return out;
}

double ParameterSet::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& e : entries_) {
    for (double v : e.value.data()) s += v * v;
  }
  return s;
}

}  // namespace wsddn::ad
