// SPDX-License-Identifier: Apache-2.0
#include "wsddn/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "wsddn/common/error.hpp"

namespace wsddn::ad {

std::size_t FiniteDifference::unreliable_count() const noexcept {
  return static_cast<std::size_t>(std::count(unreliable.begin(), unreliable.end(), true));
}

FiniteDifference finite_difference_gradient(const ScalarFunction& f, const Tensor& t, double eps,
                                            double kink_tolerance) {
  if (!(eps > 0.0)) throw UsageError("finite difference step must be positive");
  FiniteDifference out{Tensor(t.shape(), 0.0), std::vector<bool>(t.size(), false)};
  Tensor probe = t;
  probe.drop_grad();
  const double f0 = f(probe);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(probe);
    probe[i] = orig - eps;
    const double fm = f(probe);
    probe[i] = orig;

    const double central = (fp - fm) / (2.0 * eps);
    const double forward = (fp - f0) / eps;
    const double backward = (f0 - fm) / eps;
    out.gradient[i] = central;
    out.unreliable[i] =
        std::abs(forward - backward) > kink_tolerance * std::max(1.0, std::abs(central));
  }
  return out;
}

double relative_error(double analytic, double numeric) noexcept {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
}

GradientComparison compare_gradients(const Tensor& analytic, const FiniteDifference& numeric) {
  if (analytic.shape() != numeric.gradient.shape()) {
    throw UsageError("gradient shapes differ: " + shape_string(analytic.shape()) + " vs " +
                     shape_string(numeric.gradient.shape()));
  }
  GradientComparison cmp;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (numeric.unreliable[i]) {
      ++cmp.skipped;
      continue;
    }
    ++cmp.checked;
    cmp.worst_relative_error =
        std::max(cmp.worst_relative_error, relative_error(analytic[i], numeric.gradient[i]));
  }
  return cmp;
}

}  // namespace wsddn::ad
