// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "wsddn/autodiff/tensor.hpp"
#include "wsddn/network/region.hpp"

namespace wsddn::proposals {

/// Sliding-window proposal grid. Window sides are fractions of the shorter
/// image side; an aspect ratio r gives width = side * sqrt(r) and
/// height = side / sqrt(r).
struct ProposalConfig {
  std::vector<double> scales = {0.3125, 0.375};
  std::vector<double> aspect_ratios = {1.0};
  double stride_fraction = 0.25;  // of the window extent, per axis
  std::size_t max_proposals = 2000;
  double dedupe_iou = 0.95;

  /// Throws ConfigError.
  void validate() const;
};

/// Windows of every (scale, ratio), each slid across the image at its own
/// stride. Order: scale, then ratio, then rows top to bottom, then columns.
/// Windows larger than the image are skipped; throws UsageError if none fits.
/// Near duplicates are removed and the list is truncated to max_proposals.
std::vector<Region> grid_proposals(int width, int height, const ProposalConfig& cfg);

/// Greedy in-order removal of regions with IoU > threshold against an
/// already kept region.
std::vector<Region> dedupe_proposals(std::span<const Region> regions, double iou_threshold);

/// Mean gradient magnitude (central differences on channel-mean intensity,
/// replicated borders) inside a region.
double mean_edge_density(const ad::Tensor& image, const Region& region);

/// Edge-density objectness of every region, normalized so the densest
/// region scores 1. All scores are 0 when the image has no gradient.
std::vector<double> edge_density_objectness(const ad::Tensor& image, std::span<const Region> regions);

/// Copies `regions` with their objectness filled in.
std::vector<Region> score_proposals(const ad::Tensor& image, std::span<const Region> regions);

// Proposal file: one "x0 y0 x1 y1 objectness" per line.
void write_proposals(const std::filesystem::path& path, std::span<const Region> regions);
std::vector<Region> read_proposals(const std::filesystem::path& path);

}  // namespace wsddn::proposals
