// SPDX-License-Identifier: Apache-2.0
#include <string>

#include "wsddn/autodiff/ops.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/network/model.hpp"

namespace wsddn::net {

namespace {

// H x W x C -> C x H x W
ad::Tensor to_channels_first(const ad::Tensor& image) {
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  ad::Tensor out(ad::Shape{c, h, w}, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) out.at(k, y, x) = image.at(y, x, k);
    }
  }
  return out;
}

}  // namespace

FeatureMap backbone_forward(ad::Graph& g, const ad::ParameterVars& params, const ModelConfig& cfg,
                            const ad::Tensor& image) {
  if (image.rank() != 3 || image.dim(2) != cfg.input_channels) {
    throw UsageError("backbone: expected an H x W x " + std::to_string(cfg.input_channels) +
                     " image, got " + ad::shape_string(image.shape()));
  }
  const auto min_side = cfg.min_input_size();
  if (image.dim(0) < min_side || image.dim(1) < min_side) {
    throw UsageError("backbone: image " + ad::shape_string(image.shape()) +
                     " is smaller than the minimum input side of " + std::to_string(min_side) +
                     " pixels");
  }
  ad::Var x = g.constant(to_channels_first(image));
  for (std::size_t i = 0; i < cfg.backbone.size(); ++i) {
    const auto& l = cfg.backbone[i];
    const auto name = "conv" + std::to_string(i + 1);
    x = ad::conv2d(x, params[name + ".weight"], params[name + ".bias"], {l.stride, l.pad});
    x = ad::relu(x);
    if (l.pool) x = ad::max_pool2x2(x);
  }
  return {x, cfg.feature_stride()};
}

}  // namespace wsddn::net
