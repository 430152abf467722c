// SPDX-License-Identifier: Apache-2.0
#include "wsddn/training/losses.hpp"

#include "wsddn/autodiff/ops.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/evaluation/metrics.hpp"

namespace wsddn::train {

namespace {

void check_labels(const ad::Var& scores, const data::LabelVector& labels, const char* who) {
  if (scores.shape().size() != 1 || scores.shape()[0] != labels.size()) {
    throw UsageError(std::string(who) + ": scores " + ad::shape_string(scores.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  }
  for (int l : labels) {
    if (l != 1 && l != -1) throw UsageError(std::string(who) + ": labels must be -1 or +1");
  }
}

}  // namespace

ad::Var binary_log_loss(ad::Var image_scores, const data::LabelVector& labels) {
  check_labels(image_scores, labels, "binary_log_loss");
  auto& g = image_scores.graph();
  const std::size_t c = labels.size();
  ad::Tensor sign({c}, 0.0), offset({c}, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    sign[k] = labels[k];
    offset[k] = labels[k] > 0 ? 0.0 : 1.0;
  }
  auto p = ad::clamp(image_scores, kProbabilityClamp, 1.0 - kProbabilityClamp);
  auto likelihood = ad::add(ad::mul(p, g.constant(sign)), g.constant(offset));
  return ad::scale(ad::sum_all(ad::log(likelihood)), -1.0);
}

double binary_log_loss(const ad::Tensor& image_scores, const data::LabelVector& labels) {
  ad::Graph g;
  return binary_log_loss(g.constant(image_scores), labels).value().item();
}

ad::Var spatial_regularizer(ad::Var region_scores, ad::Var fc7, std::span<const Region> regions,
                            const data::LabelVector& labels, double iou_threshold,
                            std::size_t batch_images) {
  auto& g = region_scores.graph();
  const auto& xr = region_scores.value();
  const std::size_t c = labels.size();
  const std::size_t r = regions.size();
  if (xr.rank() != 2 || xr.dim(0) != c || xr.dim(1) != r) {
    throw UsageError("spatial_regularizer: scores " + ad::shape_string(xr.shape()) + " do not match " +
                     std::to_string(c) + " classes and " + std::to_string(r) + " regions");
  }
  if (fc7.shape().size() != 2 || fc7.shape()[0] != r) {
    throw UsageError("spatial_regularizer: fc7 rows do not match the region count");
  }
  if (batch_images == 0) throw UsageError("spatial_regularizer: empty batch");

  std::vector<std::size_t> anchors, neighbours, weights;
  for (std::size_t k = 0; k < c; ++k) {
    if (labels[k] != 1) continue;
    std::size_t p = 0;
    for (std::size_t j = 1; j < r; ++j) {
      if (xr.at(k, j) > xr.at(k, p)) p = j;
    }
    for (std::size_t j = 0; j < r; ++j) {
      if (j == p || eval::iou(regions[j], regions[p]) < iou_threshold) continue;
      anchors.push_back(p);
      neighbours.push_back(j);
      weights.push_back(k * r + p);
    }
  }
  if (anchors.empty()) return g.constant(ad::Tensor::scalar(0.0));

  auto diff = ad::add(ad::gather_rows(fc7, anchors), ad::scale(ad::gather_rows(fc7, neighbours), -1.0));
  auto dist = ad::sum(ad::mul(diff, diff), 1);
  auto weighted = ad::mul(ad::gather(region_scores, weights), dist);
  return ad::scale(ad::sum_all(weighted), 0.5 / static_cast<double>(batch_images * c));
}

ad::Var baseline_loss(ad::Var image_scores, const data::LabelVector& labels, std::size_t batch_images) {
  check_labels(image_scores, labels, "baseline_loss");
  if (batch_images == 0) throw UsageError("baseline_loss: empty batch");
  auto& g = image_scores.graph();
  const std::size_t c = labels.size();
  ad::Tensor sign({c}, 0.0);
  for (std::size_t k = 0; k < c; ++k) sign[k] = labels[k];
  auto margin = ad::add(ad::scale(ad::mul(image_scores, g.constant(sign)), -1.0), g.constant(ad::Tensor({c}, 1.0)));
  return ad::scale(ad::sum_all(ad::relu(margin)), 1.0 / static_cast<double>(batch_images * c));
}

ad::Var squared_weight_norm(const ad::ParameterVars& params, const ad::ParameterSet& names) {
  ad::Var total;
  for (const auto& e : names) {
    auto w = params[e.name];
    auto sq = ad::sum_all(ad::mul(w, w));
    total = total.valid() ? ad::add(total, sq) : sq;
  }
  if (!total.valid()) throw UsageError("squared_weight_norm: no parameters");
  return total;
}

}  // namespace wsddn::train
