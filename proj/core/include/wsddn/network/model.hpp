// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wsddn/autodiff/graph.hpp"
#include "wsddn/autodiff/parameters.hpp"
#include "wsddn/network/region.hpp"

namespace wsddn::net {

enum class Architecture {
  two_stream,     // WSDDN: classification x detection streams
  single_stream,  // log-sum-exp baseline over one classification head
};

struct ConvLayerSpec {
  std::size_t out_channels = 16;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;
  bool pool = true;  // 2x2 max pooling after the relu
};

struct ModelConfig {
  std::size_t input_channels = 1;
  std::vector<ConvLayerSpec> backbone = {{16, 3, 1, 1, true}, {32, 3, 1, 1, true}};
  std::size_t spp_grid = 3;
  std::size_t fc6 = 64;
  std::size_t fc7 = 64;
  std::size_t num_classes = 3;
  bool use_box_score_scaling = false;
  Architecture architecture = Architecture::two_stream;

  /// Throws ConfigError on non-positive extents or an empty backbone.
  void validate() const;

  /// Cumulative spatial stride of the backbone feature map.
  std::size_t feature_stride() const;
  std::size_t feature_channels() const;
  /// Smallest image side that still yields a 1x1 feature map.
  std::size_t min_input_size() const;
  /// Width of one pooled region descriptor (grid * grid * channels).
  std::size_t region_feature_width() const;
};

/// He-normal weights, zero biases; the two class heads start small so the
/// initial softmaxes are near uniform.
ad::ParameterSet initialize_parameters(const ModelConfig& cfg, std::uint64_t seed);

/// Throws ConfigError if `params` lacks a tensor the architecture needs or a
/// shape disagrees with `cfg`.
void check_parameters(const ad::ParameterSet& params, const ModelConfig& cfg);

// ---------------------------------------------------------------------------
// Graph-level building blocks.

struct FeatureMap {
  ad::Var map;             // [channels x h x w]
  std::size_t stride = 1;  // image pixels per feature cell
};

/// Runs the convolutional backbone once per image. `image` is H x W x Cin.
FeatureMap backbone_forward(ad::Graph& g, const ad::ParameterVars& params, const ModelConfig& cfg,
                            const ad::Tensor& image);

/// Max-pools every region of `feature_map` ([C x h x w]) into a grid x grid
/// layout -> [regions x (C * grid * grid)], channel-major within a row.
///
/// A region is projected onto the map with floor(start / stride) and
/// ceil(end / stride), clamped, and widened to at least one cell. Along each
/// axis the projected extent L is split into `grid` bins: when L >= grid the
/// bins partition it with the first L % grid bins one cell larger; when
/// L < grid bin i covers [floor(i L / grid), ceil((i + 1) L / grid)).
/// The gradient of each output goes to the first maximal cell (row-major).
ad::Var roi_spp_pool(ad::Var feature_map, std::span<const Region> regions, std::size_t stride,
                     std::size_t grid);

/// Per-axis bin boundaries used by roi_spp_pool; exposed for tests.
struct Span1D {
  std::size_t begin = 0;
  std::size_t end = 0;
};
Span1D project_interval(int begin_px, int end_px, std::size_t stride, std::size_t map_extent);
Span1D pooling_bin(const Span1D& cells, std::size_t bin, std::size_t grid);

/// Scales row r of `features` by the region's objectness divided by the
/// largest objectness in the list. If every objectness is zero the rows are
/// passed through unchanged.
ad::Var box_score_scale(ad::Var features, std::span<const Region> regions);

/// fc6 -> relu -> fc7 -> relu, row-wise.
ad::Var fc_stack(ad::Var features, const ad::ParameterVars& params);

/// fc8c followed by a softmax over classes for each region -> [C x R].
ad::Var classification_stream(ad::Var fc7, const ad::ParameterVars& params);

/// fc8d followed by a softmax over regions for each class -> [C x R].
ad::Var detection_stream(ad::Var fc7, const ad::ParameterVars& params);

/// Raw (pre-softmax) head output transposed to [C x R].
ad::Var class_logits(ad::Var fc7, const ad::ParameterVars& params, const char* head);

/// Element-wise product of the two streams.
ad::Var combine_scores(ad::Var class_probs, ad::Var det_probs);

/// Sum over regions -> [C].
ad::Var image_scores(ad::Var region_scores);

struct BaselineOutput {
  ad::Var region_scores;  // raw fc8c scores [C x R]
  ad::Var image_scores;   // log-sum-exp over regions [C]
};
BaselineOutput baseline_forward(ad::Var fc7, const ad::ParameterVars& params);

/// Every intermediate of one forward pass. For the single-stream
/// architecture `class_probs` and `det_probs` are unset and
/// `region_scores` holds the raw head scores.
struct ForwardPass {
  FeatureMap features;
  ad::Var pooled;
  ad::Var fc7;
  ad::Var class_probs;
  ad::Var det_probs;
  ad::Var region_scores;
  ad::Var image_scores;
};

ForwardPass forward(ad::Graph& g, const ad::ParameterVars& params, const ModelConfig& cfg,
                    const ad::Tensor& image, std::span<const Region> regions);

// ---------------------------------------------------------------------------
// Inference without keeping the graph around.

struct RegionScores {
  std::optional<ad::Tensor> class_probs;  // [C x R], two-stream only
  std::optional<ad::Tensor> det_probs;    // [C x R], two-stream only
  ad::Tensor region_scores;  // [C x R]
  ad::Tensor image_scores;   // [C]
};

RegionScores score_image(const ad::ParameterSet& params, const ModelConfig& cfg,
                         const ad::Tensor& image, std::span<const Region> regions);

}  // namespace wsddn::net
