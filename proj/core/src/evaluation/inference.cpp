// SPDX-License-Identifier: Apache-2.0
#include "wsddn/evaluation/inference.hpp"

#include "wsddn/common/error.hpp"

namespace wsddn::eval {

ViewScores multi_view_scores(const ad::ParameterSet& params, const net::ModelConfig& model,
                             const data::ImageSample& sample, std::span<const train::View> views) {
  if (views.empty()) throw UsageError("multi_view_scores: no views");
  std::vector<ad::Tensor> regions, images;
  for (const auto& view : views) {
    const auto v = train::apply_view(sample, view);
    auto s = net::score_image(params, model, v.image, v.proposals);
    regions.push_back(std::move(s.region_scores));
    images.push_back(std::move(s.image_scores));
  }
  return {ensemble_average(regions), ensemble_average(images)};
}

ad::Tensor region_scores(const ad::ParameterSet& params, const net::ModelConfig& model,
                         const data::ImageSample& sample, const InferenceOptions& opts) {
  if (!opts.multi_view || opts.scales.empty()) {
    return net::score_image(params, model, sample.image, sample.proposals).region_scores;
  }
  return multi_view_scores(params, model, sample, train::all_views(opts.scales)).region_scores;
}

ad::Tensor ensemble_region_scores(std::span<const ad::ParameterSet> models, const net::ModelConfig& model,
                                  const data::ImageSample& sample, const InferenceOptions& opts) {
  if (models.empty()) throw UsageError("ensemble: no models");
  std::vector<ad::Tensor> scores;
  for (const auto& m : models) scores.push_back(region_scores(m, model, sample, opts));
  return ensemble_average(scores);
}

std::vector<ImageDetection> detect(std::span<const ad::ParameterSet> models, const net::ModelConfig& model,
                                   const data::Dataset& split, const InferenceOptions& opts) {
  std::vector<ImageDetection> out;
  for (const auto& s : split.samples) {
    const auto scores = ensemble_region_scores(models, model, s, opts);
    for (auto& d : detections_from_scores(scores, s.proposals, opts.nms_threshold)) {
      out.push_back({s.id, d});
    }
  }
  return out;
}

MetricsReport evaluate(std::span<const ImageDetection> test_dets, const GroundTruth& test_gt,
                       std::span<const ImageDetection> train_dets, const GroundTruth& train_gt,
                       const std::vector<std::string>& class_names) {
  MetricsReport r;
  r.class_names = class_names;
  r.ap = average_precision(test_dets, test_gt, class_names.size());
  r.corloc = corloc(train_dets, train_gt, class_names.size());
  return r;
}

}  // namespace wsddn::eval
