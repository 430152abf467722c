// SPDX-License-Identifier: Apache-2.0
#include "wsddn/proposals/proposals.hpp"

#include <algorithm>
#include <cmath>

#include "common/text_io.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/evaluation/metrics.hpp"

namespace wsddn::proposals {

void ProposalConfig::validate() const {
  if (scales.empty() || aspect_ratios.empty()) throw ConfigError("proposals: scales and ratios must be nonempty");
  for (double s : scales) {
    if (!(s > 0.0)) throw ConfigError("proposals: scales must be positive");
  }
  for (double r : aspect_ratios) {
    if (!(r > 0.0)) throw ConfigError("proposals: aspect ratios must be positive");
  }
  if (!(stride_fraction > 0.0 && stride_fraction <= 1.0)) {
    throw ConfigError("proposals: stride_fraction must lie in (0, 1]");
  }
  if (max_proposals == 0) throw ConfigError("proposals: max_proposals must be at least 1");
  if (!(dedupe_iou > 0.0 && dedupe_iou <= 1.0)) throw ConfigError("proposals: dedupe_iou must lie in (0, 1]");
}

std::vector<Region> grid_proposals(int width, int height, const ProposalConfig& cfg) {
  cfg.validate();
  if (width <= 0 || height <= 0) throw UsageError("grid_proposals: empty image");
  const double side = std::min(width, height);
  std::vector<Region> out;
  for (double s : cfg.scales) {
    for (double r : cfg.aspect_ratios) {
      const int ww = std::max(1, static_cast<int>(std::lround(s * side * std::sqrt(r))));
      const int wh = std::max(1, static_cast<int>(std::lround(s * side / std::sqrt(r))));
      if (ww > width || wh > height) continue;
      const int sx = std::max(1, static_cast<int>(std::lround(cfg.stride_fraction * ww)));
      const int sy = std::max(1, static_cast<int>(std::lround(cfg.stride_fraction * wh)));
      for (int y = 0; y + wh <= height; y += sy) {
        for (int x = 0; x + ww <= width; x += sx) out.push_back({x, y, x + ww, y + wh, std::nullopt});
      }
    }
  }
  if (out.empty()) {
    throw UsageError("grid_proposals: a " + std::to_string(width) + "x" + std::to_string(height) +
                     " image is smaller than every proposal window");
  }
  out = dedupe_proposals(out, cfg.dedupe_iou);
  if (out.size() > cfg.max_proposals) out.resize(cfg.max_proposals);
  return out;
}

std::vector<Region> dedupe_proposals(std::span<const Region> regions, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) throw UsageError("dedupe threshold must lie in (0, 1]");
  std::vector<Region> kept;
  for (const auto& r : regions) {
    const bool dup = std::any_of(kept.begin(), kept.end(),
                                 [&](const Region& k) { return eval::iou(r, k) > iou_threshold; });
    if (!dup) kept.push_back(r);
  }
  return kept;
}

namespace {

// Summed-area table of the gradient magnitude, (h + 1) x (w + 1).
std::vector<double> gradient_integral(const ad::Tensor& image) {
  if (image.rank() != 3) throw UsageError("objectness: image must be H x W x C");
  const std::size_t h = image.dim(0), w = image.dim(1), c = image.dim(2);
  std::vector<double> gray(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) s += image.at(y, x, k);
      gray[y * w + x] = s / static_cast<double>(c);
    }
  }
  auto px = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
    y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
    x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
    return gray[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  std::vector<double> integral((h + 1) * (w + 1), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < w; ++x) {
      const auto iy = static_cast<std::ptrdiff_t>(y), ix = static_cast<std::ptrdiff_t>(x);
      const double gx = 0.5 * (px(iy, ix + 1) - px(iy, ix - 1));
      const double gy = 0.5 * (px(iy + 1, ix) - px(iy - 1, ix));
      row += std::sqrt(gx * gx + gy * gy);
      integral[(y + 1) * (w + 1) + x + 1] = integral[y * (w + 1) + x + 1] + row;
    }
  }
  return integral;
}

double region_mean(const std::vector<double>& integral, std::size_t w, const Region& r) {
  const auto at = [&](int y, int x) {
    return integral[static_cast<std::size_t>(y) * (w + 1) + static_cast<std::size_t>(x)];
  };
  const double total = at(r.y1, r.x1) - at(r.y0, r.x1) - at(r.y1, r.x0) + at(r.y0, r.x0);
  return total / static_cast<double>(r.area());
}

}  // namespace

double mean_edge_density(const ad::Tensor& image, const Region& region) {
  const auto integral = gradient_integral(image);
  validate_region(region, static_cast<int>(image.dim(1)), static_cast<int>(image.dim(0)));
  return region_mean(integral, image.dim(1), region);
}

std::vector<double> edge_density_objectness(const ad::Tensor& image, std::span<const Region> regions) {
  const auto integral = gradient_integral(image);
  const int w = static_cast<int>(image.dim(1)), h = static_cast<int>(image.dim(0));
  std::vector<double> scores;
  scores.reserve(regions.size());
  for (const auto& r : regions) {
    validate_region(r, w, h);
    scores.push_back(region_mean(integral, image.dim(1), r));
  }
  const double top = scores.empty() ? 0.0 : *std::max_element(scores.begin(), scores.end());
  for (double& s : scores) s = top > 0.0 ? std::clamp(s / top, 0.0, 1.0) : 0.0;
  return scores;
}

std::vector<Region> score_proposals(const ad::Tensor& image, std::span<const Region> regions) {
  const auto scores = edge_density_objectness(image, regions);
  std::vector<Region> out(regions.begin(), regions.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].objectness = scores[i];
  return out;
}

void write_proposals(const std::filesystem::path& path, std::span<const Region> regions) {
  std::string out;
  for (const auto& r : regions) {
    out += std::to_string(r.x0) + " " + std::to_string(r.y0) + " " + std::to_string(r.x1) + " " +
           std::to_string(r.y1) + " " + text::format_double(r.objectness.value_or(0.0)) + "\n";
  }
  text::write_file(path, out);
}

std::vector<Region> read_proposals(const std::filesystem::path& path) {
  std::vector<Region> out;
  text::for_each_line(path, [&](text::LineCursor& line) {
    Region r;
    r.x0 = line.integer<int>("x0");
    r.y0 = line.integer<int>("y0");
    r.x1 = line.integer<int>("x1");
    r.y1 = line.integer<int>("y1");
    r.objectness = line.real("objectness");
    line.expect_end();
    if (r.x0 < 0 || r.y0 < 0 || r.x1 <= r.x0 || r.y1 <= r.y0) line.fail("invalid proposal box");
    if (!(*r.objectness >= 0.0)) line.fail("negative objectness");
    out.push_back(r);
  });
  return out;
}

}  // namespace wsddn::proposals
