// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "wsddn/autodiff/tensor.hpp"

namespace wsddn::ad {

/// Central-difference estimate of the gradient of a scalar function.
///
/// An element is flagged `unreliable` when the forward and backward
/// one-sided slopes disagree by more than `kink_tolerance * max(1, |central|)`,
/// which happens when a nondifferentiable point (relu at 0, a max-pool or
/// argmax switch) lies within `eps` of the probe.
struct FiniteDifference {
  Tensor gradient;
  std::vector<bool> unreliable;

  std::size_t unreliable_count() const noexcept;
};

using ScalarFunction = std::function<double(const Tensor&)>;

FiniteDifference finite_difference_gradient(const ScalarFunction& f, const Tensor& t,
                                            double eps = 1e-5, double kink_tolerance = 1e-4);

/// |analytic - numeric| / max(1, |numeric|)
double relative_error(double analytic, double numeric) noexcept;

struct GradientComparison {
  double worst_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;  // flagged as unreliable
};

/// Compares an analytic gradient against a finite-difference estimate,
/// skipping unreliable elements.
GradientComparison compare_gradients(const Tensor& analytic, const FiniteDifference& numeric);

}  // namespace wsddn::ad
