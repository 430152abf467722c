// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "wsddn/autodiff/parameters.hpp"

namespace wsddn::ad {

/// Stochastic gradient descent with momentum and L2 weight decay:
///
///   v <- momentum * v + grad + weight_decay * w
///   w <- w - lr * v
///
/// The velocity buffers persist across step() calls.
class SgdMomentum {
 public:
  SgdMomentum(double momentum, double weight_decay);

  /// Throws UsageError when `grads` does not align with `params` by name
  /// and shape, or when lr is negative.
  void step(ParameterSet& params, const ParameterSet& grads, double lr);

  double momentum() const noexcept { return momentum_; }
  double weight_decay() const noexcept { return weight_decay_; }

  const ParameterSet& velocity() const noexcept { return velocity_; }
  void set_velocity(ParameterSet v) { velocity_ = std::move(v); }

 private:
  double momentum_;
  double weight_decay_;
  ParameterSet velocity_;
};

}  // namespace wsddn::ad
