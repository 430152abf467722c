// SPDX-License-Identifier: Apache-2.0
#include "wsddn/autodiff/optimizer.hpp"

#include "wsddn/common/error.hpp"

namespace wsddn::ad {

SgdMomentum::SgdMomentum(double momentum, double weight_decay)
    : momentum_(momentum), weight_decay_(weight_decay) {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw UsageError("momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw UsageError("weight decay must be nonnegative");
}

void SgdMomentum::step(ParameterSet& params, const ParameterSet& grads, double lr) {
  if (!(lr >= 0.0)) throw UsageError("learning rate must be nonnegative");
  if (grads.size() != params.size()) throw UsageError("gradient set does not match parameters");
  if (velocity_.empty()) velocity_ = params.zeros_like();

  for (auto& [name, w] : params) {
    const Tensor& g = grads.at(name);
    Tensor& v = velocity_.at(name);
    if (g.shape() != w.shape() || v.shape() != w.shape()) {
      throw UsageError("shape mismatch for parameter '" + name + "': " + shape_string(w.shape()) +
                       " vs gradient " + shape_string(g.shape()));
    }
    auto wd = w.data();
    auto vd = v.data();
    const auto gd = g.data();
    for (std::size_t i = 0; i < wd.size(); ++i) {
      vd[i] = momentum_ * vd[i] + gd[i] + weight_decay_ * wd[i];
      wd[i] -= lr * vd[i];
    }
  }
}

}  // namespace wsddn::ad
