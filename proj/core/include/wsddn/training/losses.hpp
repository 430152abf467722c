// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "wsddn/autodiff/graph.hpp"
#include "wsddn/dataset/dataset.hpp"
#include "wsddn/network/model.hpp"
#include "wsddn/network/region.hpp"

namespace wsddn::train {

inline constexpr double kProbabilityClamp = 1e-12;

/// Sum over classes of -log(y_k (p_k - 1/2) + 1/2), with p clamped to
/// [1e-12, 1 - 1e-12] first. `image_scores` is [C].
ad::Var binary_log_loss(ad::Var image_scores, const data::LabelVector& labels);
double binary_log_loss(const ad::Tensor& image_scores, const data::LabelVector& labels);

/// Feature-smoothness penalty. For every positive class k, p is the region
/// with the largest combined score (lowest index on ties); each other region
/// with IoU(r, p) >= iou_threshold adds 1/2 x_kp |fc7_p - fc7_r|^2. The sum
/// is divided by batch_images * C. Returns a zero constant if nothing
/// qualifies.
ad::Var spatial_regularizer(ad::Var region_scores, ad::Var fc7, std::span<const Region> regions,
                            const data::LabelVector& labels, double iou_threshold,
                            std::size_t batch_images);

/// (1 / (n C)) sum_k max(0, 1 - y_k s_k) for one image of an n-image batch.
ad::Var baseline_loss(ad::Var image_scores, const data::LabelVector& labels, std::size_t batch_images);

/// Sum of squared entries of every bound parameter.
ad::Var squared_weight_norm(const ad::ParameterVars& params, const ad::ParameterSet& names);

}  // namespace wsddn::train
