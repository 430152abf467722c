// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "wsddn/autodiff/parameters.hpp"
#include "wsddn/dataset/dataset.hpp"
#include "wsddn/evaluation/metrics.hpp"
#include "wsddn/network/model.hpp"
#include "wsddn/training/jitter.hpp"

namespace wsddn::eval {

struct InferenceOptions {
  bool multi_view = false;
  std::vector<int> scales = {48, 64, 80};  // longest sides used with multi_view
  double nms_threshold = 0.4;
};

struct ViewScores {
  ad::Tensor region_scores;  // [C x R]
  ad::Tensor image_scores;   // [C]
};

/// Runs the network once per view, with the sample's regions mapped into
/// each view, and averages x^R and y over the views. Region indices are
/// preserved by every view. Throws UsageError on an empty view list.
ViewScores multi_view_scores(const ad::ParameterSet& params, const net::ModelConfig& model,
                             const data::ImageSample& sample, std::span<const train::View> views);

/// [C x R] region scores for the sample's proposals; with multi_view, the
/// multi_view_scores average over every (scale, flip) combination.
ad::Tensor region_scores(const ad::ParameterSet& params, const net::ModelConfig& model,
                         const data::ImageSample& sample, const InferenceOptions& opts);

/// Average of region_scores over an ensemble of models sharing one config.
ad::Tensor ensemble_region_scores(std::span<const ad::ParameterSet> models, const net::ModelConfig& model,
                                  const data::ImageSample& sample, const InferenceOptions& opts);

/// Post-NMS detections for every image of the split, in sample order.
std::vector<ImageDetection> detect(std::span<const ad::ParameterSet> models, const net::ModelConfig& model,
                                   const data::Dataset& split, const InferenceOptions& opts);

/// AP over `test_dets` against the test ground truth and CorLoc over
/// `train_dets` against the training ground truth.
MetricsReport evaluate(std::span<const ImageDetection> test_dets, const GroundTruth& test_gt,
                       std::span<const ImageDetection> train_dets, const GroundTruth& train_gt,
                       const std::vector<std::string>& class_names);

}  // namespace wsddn::eval
