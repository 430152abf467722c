// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wsddn/autodiff/tensor.hpp"
#include "wsddn/common/random.hpp"
#include "wsddn/evaluation/metrics.hpp"
#include "wsddn/network/region.hpp"
#include "wsddn/proposals/proposals.hpp"

namespace wsddn::data {

/// Image-level labels: entry k is +1 if class k is present, -1 otherwise.
using LabelVector = std::vector<int>;

struct ImageSample {
  std::string id;
  ad::Tensor image;  // H x W x 1, intensities in [0, 1]
  LabelVector labels;
  std::vector<Region> proposals;
  std::vector<eval::GtBox> gt;  // evaluation only; empty when read for training

  int width() const { return static_cast<int>(image.dim(1)); }
  int height() const { return static_cast<int>(image.dim(0)); }

  friend bool operator==(const ImageSample&, const ImageSample&) = default;
};

enum class ShapeKind { disk, square, triangle };

struct ClassSpec {
  std::string name;
  ShapeKind shape = ShapeKind::square;
  double intensity_lo = 0.5;
  double intensity_hi = 1.0;
};

struct DatasetConfig {
  int width = 64;
  int height = 64;
  std::vector<ClassSpec> classes = {
      {"disk", ShapeKind::disk, 0.45, 0.60},
      {"square", ShapeKind::square, 0.65, 0.80},
      {"triangle", ShapeKind::triangle, 0.85, 1.00},
  };
  int min_instances = 1;
  int max_instances = 3;
  int min_size = 16;  // side of the shape's bounding square, pixels
  int max_size = 24;
  double noise_amplitude = 0.25;  // background is uniform in [0, amplitude)
  double min_contrast = 0.15;     // required gap between box and background means
  int margin = 2;                 // gt boxes stay this far from the border
  std::size_t train_count = 500;
  std::size_t test_count = 100;
  std::uint64_t seed = 0;

  std::size_t num_classes() const noexcept { return classes.size(); }
  std::vector<std::string> class_names() const;

  /// Throws ConfigError (e.g. fewer than two classes).
  void validate() const;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<ImageSample> samples;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  eval::GroundTruth ground_truth() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// One synthetic image: uniform background noise plus 1..3 flat shapes that
/// do not touch each other or the border margin. Boxes are tight around the
/// rendered pixels and labels follow from them.
ImageSample generate_sample(Rng& rng, const DatasetConfig& cfg,
                            const proposals::ProposalConfig& proposal_cfg, std::string id);

struct Splits {
  Dataset train;
  Dataset test;
};

/// Deterministic in (cfg, proposal_cfg): sample i of a split is drawn from
/// a generator seeded with the config seed mixed with the split and i.
Splits generate_dataset(const DatasetConfig& cfg, const proposals::ProposalConfig& proposal_cfg);

/// Mean intensity inside the sample's gt boxes minus the mean outside all
/// of them.
double contrast_gap(const ImageSample& sample);

/// Labels implied by a gt list.
LabelVector labels_from_gt(const std::vector<eval::GtBox>& gt, std::size_t num_classes);

enum class GtAccess { excluded, included };

/// Layout under `dir`:
///   manifest.json         ids, label vectors, file names
///   images/<id>.wten      image tensor (named-tensor container)
///   proposals/<id>.txt    "x0 y0 x1 y1 objectness" lines
///   gt/<id>.txt           "classIndex x0 y0 x1 y1" lines
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Throws ParseError naming the file and byte offset for malformed input.
/// With GtAccess::excluded the gt directory is never opened.
Dataset read_dataset(const std::filesystem::path& dir, GtAccess gt = GtAccess::excluded);

/// Ground truth of a dataset directory, read from gt/ only.
eval::GroundTruth read_ground_truth(const std::filesystem::path& dir);

}  // namespace wsddn::data
