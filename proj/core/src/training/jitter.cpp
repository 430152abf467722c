// SPDX-License-Identifier: Apache-2.0
#include "wsddn/training/jitter.hpp"

#include <algorithm>
#include <cmath>

#include "wsddn/common/error.hpp"

namespace wsddn::train {

ad::Tensor resize_bilinear(const ad::Tensor& image, int new_width, int new_height) {
  if (image.rank() != 3) throw UsageError("resize: image must be H x W x C");
  if (new_width < 1 || new_height < 1) throw UsageError("resize: target must be at least 1x1");
  const auto h = static_cast<int>(image.dim(0)), w = static_cast<int>(image.dim(1));
  const auto c = image.dim(2);
  if (new_width == w && new_height == h) return image;
  ad::Tensor out({static_cast<std::size_t>(new_height), static_cast<std::size_t>(new_width), c}, 0.0);
  const double sy = static_cast<double>(h) / new_height, sx = static_cast<double>(w) / new_width;
  for (int y = 0; y < new_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      for (std::size_t k = 0; k < c; ++k) {
        auto px = [&](int yy, int xx) {
          return image.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), k);
        };
        const double top = px(y0, x0) * (1 - tx) + px(y0, x1) * tx;
        const double bottom = px(y1, x0) * (1 - tx) + px(y1, x1) * tx;
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), k) = top * (1 - ty) + bottom * ty;
      }
    }
  }
  return out;
}

ad::Tensor flip_horizontal(const ad::Tensor& image) {
  if (image.rank() != 3) throw UsageError("flip: image must be H x W x C");
  const auto h = image.dim(0), w = image.dim(1), c = image.dim(2);
  ad::Tensor out(image.shape(), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t k = 0; k < c; ++k) out.at(y, w - 1 - x, k) = image.at(y, x, k);
    }
  }
  return out;
}

Region flip_region(const Region& r, int width) {
  Region out = r;
  out.x0 = width - r.x1;
  out.x1 = width - r.x0;
  return out;
}

Region rescale_region(const Region& r, int old_width, int old_height, int new_width, int new_height) {
  if (old_width == new_width && old_height == new_height) return r;
  const double fx = static_cast<double>(new_width) / old_width;
  const double fy = static_cast<double>(new_height) / old_height;
  auto scale = [](int v, double f, int limit) {
    return std::clamp(static_cast<int>(std::lround(v * f)), 0, limit);
  };
  Region out = r;
  out.x0 = std::min(scale(r.x0, fx, new_width), new_width - 1);
  out.y0 = std::min(scale(r.y0, fy, new_height), new_height - 1);
  out.x1 = std::max(scale(r.x1, fx, new_width), out.x0 + 1);
  out.y1 = std::max(scale(r.y1, fy, new_height), out.y0 + 1);
  return out;
}

std::pair<int, int> view_size(int width, int height, const View& view) {
  if (view.longest_side <= 0) return {width, height};
  const int longest = std::max(width, height);
  if (longest == view.longest_side) return {width, height};
  const double f = static_cast<double>(view.longest_side) / longest;
  return {std::max(1, static_cast<int>(std::lround(width * f))),
          std::max(1, static_cast<int>(std::lround(height * f)))};
}

data::ImageSample apply_view(const data::ImageSample& sample, const View& view) {
  data::ImageSample out = sample;
  const int w = sample.width(), h = sample.height();
  if (view.flip) {
    out.image = flip_horizontal(out.image);
    for (auto& r : out.proposals) r = flip_region(r, w);
    for (auto& b : out.gt) b.region = flip_region(b.region, w);
  }
  const auto [nw, nh] = view_size(w, h, view);
  if (nw != w || nh != h) {
    out.image = resize_bilinear(out.image, nw, nh);
    for (auto& r : out.proposals) r = rescale_region(r, w, h, nw, nh);
    for (auto& b : out.gt) b.region = rescale_region(b.region, w, h, nw, nh);
  }
  return out;
}

data::ImageSample jitter(const data::ImageSample& sample, Rng& rng, std::span<const int> scales) {
  View v;
  v.flip = rng.bernoulli(0.5);
  if (!scales.empty()) v.longest_side = scales[rng.below(scales.size())];
  return apply_view(sample, v);
}

std::vector<View> all_views(std::span<const int> scales) {
  std::vector<View> views;
  for (int s : scales) {
    views.push_back({s, false});
    views.push_back({s, true});
  }
  return views;
}

}  // namespace wsddn::train
