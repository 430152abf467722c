// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "wsddn/autodiff/tensor.hpp"

namespace wsddn::ad {

/// Ordered collection of uniquely named tensors. Used for model weights,
/// their gradients, and optimizer state.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  /// Throws UsageError if `name` is already present.
  void add(std::string name, Tensor value);
  void set(std::string_view name, Tensor value);  // add or replace

  bool contains(std::string_view name) const noexcept;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t element_count() const noexcept;

  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  /// Zero-filled set with the same names and shapes.
  ParameterSet zeros_like() const;

  /// Sum of squares of all elements.
  double squared_norm() const noexcept;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  const Entry* find(std::string_view name) const noexcept;
  std::vector<Entry> entries_;
};

using ModelParams = ParameterSet;

}  // namespace wsddn::ad
