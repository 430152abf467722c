// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <string>

#include "wsddn/autodiff/ops.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/network/model.hpp"

namespace wsddn::net {

namespace {

ad::Var linear(ad::Var x, const ad::ParameterVars& params, const std::string& layer) {
  const auto w = params[layer + ".weight"];
  if (x.shape().size() != 2 || x.shape()[1] != w.shape()[0]) {
    throw UsageError(layer + ": input " + ad::shape_string(x.shape()) +
                     " does not match weight " + ad::shape_string(w.shape()));
  }
  return ad::add(ad::matmul(x, w), params[layer + ".bias"]);
}

}  // namespace

ad::Var box_score_scale(ad::Var features, std::span<const Region> regions) {
  const auto& shape = features.shape();
  if (shape.size() != 2 || shape[0] != regions.size()) {
    throw UsageError("box_score_scale: feature rows do not match the region list");
  }
  double top = 0.0;
  for (const auto& r : regions) {
    if (!r.objectness) {
      throw UsageError("box_score_scale: region " + r.to_string() + " has no objectness score");
    }
    if (!(*r.objectness >= 0.0)) throw UsageError("box_score_scale: negative objectness");
    top = std::max(top, *r.objectness);
  }
  const std::size_t cols = shape[1];
  ad::Tensor factors(shape, 1.0);
  if (top > 0.0) {
    for (std::size_t r = 0; r < regions.size(); ++r) {
      const double f = *regions[r].objectness / top;
      std::fill_n(factors.data().begin() + static_cast<std::ptrdiff_t>(r * cols), cols, f);
    }
  }
  return ad::mul(features, features.graph().constant(std::move(factors)));
}

ad::Var fc_stack(ad::Var features, const ad::ParameterVars& params) {
  auto x = ad::relu(linear(features, params, "fc6"));
  return ad::relu(linear(x, params, "fc7"));
}

ad::Var class_logits(ad::Var fc7, const ad::ParameterVars& params, const char* head) {
  if (fc7.shape().size() != 2 || fc7.shape()[0] == 0) {
    throw UsageError("class head needs at least one region");
  }
  return ad::transpose(linear(fc7, params, head));
}

ad::Var classification_stream(ad::Var fc7, const ad::ParameterVars& params) {
  return ad::softmax(class_logits(fc7, params, "fc8c"), 0);
}

ad::Var detection_stream(ad::Var fc7, const ad::ParameterVars& params) {
  return ad::softmax(class_logits(fc7, params, "fc8d"), 1);
}

ad::Var combine_scores(ad::Var class_probs, ad::Var det_probs) {
  if (class_probs.shape() != det_probs.shape()) {
    throw UsageError("combine_scores: stream shapes differ: " +
                     ad::shape_string(class_probs.shape()) + " vs " +
                     ad::shape_string(det_probs.shape()));
  }
  return ad::mul(class_probs, det_probs);
}

ad::Var image_scores(ad::Var region_scores) { return ad::sum(region_scores, 1); }

BaselineOutput baseline_forward(ad::Var fc7, const ad::ParameterVars& params) {
  auto scores = class_logits(fc7, params, "fc8c");
  return {scores, ad::logsumexp(scores, 1)};
}

ForwardPass forward(ad::Graph& g, const ad::ParameterVars& params, const ModelConfig& cfg,
                    const ad::Tensor& image, std::span<const Region> regions) {
  if (regions.empty()) throw UsageError("forward: image has no regions");
  const auto width = static_cast<int>(image.dim(1));
  const auto height = static_cast<int>(image.dim(0));
  for (const auto& r : regions) validate_region(r, width, height);

  ForwardPass fp;
  fp.features = backbone_forward(g, params, cfg, image);
  fp.pooled = roi_spp_pool(fp.features.map, regions, fp.features.stride, cfg.spp_grid);
  if (cfg.use_box_score_scaling) fp.pooled = box_score_scale(fp.pooled, regions);
  fp.fc7 = fc_stack(fp.pooled, params);
  if (cfg.architecture == Architecture::single_stream) {
    auto out = baseline_forward(fp.fc7, params);
    fp.region_scores = out.region_scores;
    fp.image_scores = out.image_scores;
    return fp;
  }
  fp.class_probs = classification_stream(fp.fc7, params);
  fp.det_probs = detection_stream(fp.fc7, params);
  fp.region_scores = combine_scores(fp.class_probs, fp.det_probs);
  fp.image_scores = image_scores(fp.region_scores);
  return fp;
}

RegionScores score_image(const ad::ParameterSet& params, const ModelConfig& cfg,
                         const ad::Tensor& image, std::span<const Region> regions) {
  ad::Graph g;
  // Bound as constants: inference needs no gradients.
  ad::ParameterVars vars;
  for (const auto& e : params) vars.insert(e.name, g.constant(e.value));
  const auto fp = forward(g, vars, cfg, image, regions);
  RegionScores out;
  if (fp.class_probs.valid()) out.class_probs = fp.class_probs.value();
  if (fp.det_probs.valid()) out.det_probs = fp.det_probs.value();
  out.region_scores = fp.region_scores.value();
  out.image_scores = fp.image_scores.value();
  return out;
}

}  // namespace wsddn::net
