// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsddn/autodiff/tensor.hpp"
#include "wsddn/network/region.hpp"

namespace wsddn::eval {

struct Detection {
  std::size_t class_index = 0;
  Region region;
  double score = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ImageDetection {
  std::string image_id;
  Detection det;

  friend bool operator==(const ImageDetection&, const ImageDetection&) = default;
};

struct GtBox {
  std::size_t class_index = 0;
  Region region;

  friend bool operator==(const GtBox&, const GtBox&) = default;
};

/// Image id -> annotated instances. Evaluation only.
using GroundTruth = std::map<std::string, std::vector<GtBox>>;

/// Intersection over union with half-open pixel areas.
double iou(const Region& a, const Region& b) noexcept;

/// Greedy non-maximum suppression for detections of a single class.
/// Candidates are visited by descending score (ties: earlier input first);
/// each kept box removes every remaining box with IoU > threshold.
/// Throws UsageError if classes are mixed.
std::vector<Detection> nms(std::span<const Detection> dets, double threshold = 0.4);

/// Turns a [C x R] region score matrix into post-NMS detections for every
/// class, ordered by class then descending score.
std::vector<Detection> detections_from_scores(const ad::Tensor& region_scores,
                                              std::span<const Region> regions,
                                              double nms_threshold = 0.4);

/// VOC 2007 11-point interpolated AP from a ranked list of hit flags.
double eleven_point_ap(const std::vector<bool>& ranked_hits, std::size_t num_positives);

/// Per-class AP in [0, 1] over detections pooled across images. A class
/// with no ground-truth instance yields nullopt. A detection counts as a
/// true positive when its best IoU among still-unmatched instances of its
/// class in the same image is >= iou_threshold; that instance is then
/// consumed.
std::vector<std::optional<double>> average_precision(std::span<const ImageDetection> dets,
                                                     const GroundTruth& gt,
                                                     std::size_t num_classes,
                                                     double iou_threshold = 0.5);

/// Per-class CorLoc as a percentage. For each image containing the class,
/// the highest-scoring detection of that class is a hit if it overlaps some
/// instance of the class with IoU >= iou_threshold. Classes with no
/// positive image yield nullopt.
std::vector<std::optional<double>> corloc(std::span<const ImageDetection> dets,
                                          const GroundTruth& gt, std::size_t num_classes,
                                          double iou_threshold = 0.5);

/// Mean over the defined entries; nullopt if none is defined.
std::optional<double> mean_defined(std::span<const std::optional<double>> values);

/// Element-wise arithmetic mean of equally shaped score tensors.
ad::Tensor ensemble_average(std::span<const ad::Tensor> score_sets);

struct MetricsReport {
  std::vector<std::string> class_names;
  std::vector<std::optional<double>> ap;      // fractions
  std::vector<std::optional<double>> corloc;  // percentages

  std::optional<double> mean_ap_percent() const;
  std::optional<double> mean_corloc() const;

  /// Plain-text table, four decimals, AP and CorLoc both in percent.
  std::string format() const;
};

// Detections file: one "imageId classIndex score x0 y0 x1 y1" per line.
void write_detections(const std::filesystem::path& path, std::span<const ImageDetection> dets);
std::vector<ImageDetection> read_detections(const std::filesystem::path& path);
std::string format_detection_line(const ImageDetection& d);

}  // namespace wsddn::eval
