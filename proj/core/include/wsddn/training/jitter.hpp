// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "wsddn/autodiff/tensor.hpp"
#include "wsddn/common/random.hpp"
#include "wsddn/dataset/dataset.hpp"
#include "wsddn/network/region.hpp"

namespace wsddn::train {

/// A deterministic test-time or training-time view of an image.
struct View {
  int longest_side = 0;  // 0 keeps the original size
  bool flip = false;     // horizontal mirror, applied before resizing

  friend bool operator==(const View&, const View&) = default;
};

/// Bilinear resampling (pixel-centre aligned) of an H x W x C image.
ad::Tensor resize_bilinear(const ad::Tensor& image, int new_width, int new_height);

ad::Tensor flip_horizontal(const ad::Tensor& image);

/// Mirror about the vertical axis of a `width`-wide image: x' = width - x.
Region flip_region(const Region& r, int width);

/// Rescales box corners by the size ratio, rounding to the nearest pixel
/// and keeping at least one pixel of extent inside the new image.
Region rescale_region(const Region& r, int old_width, int old_height, int new_width, int new_height);

/// Output size for a view: the longer side becomes `longest_side` and the
/// aspect ratio is kept.
std::pair<int, int> view_size(int width, int height, const View& view);

/// Applies a view to the image, its proposals and its gt boxes; labels are
/// unchanged. A view that neither flips nor changes the size returns an
/// identical sample.
data::ImageSample apply_view(const data::ImageSample& sample, const View& view);

/// Training-time augmentation: a horizontal flip with probability 1/2 and a
/// longest side drawn uniformly from `scales`.
data::ImageSample jitter(const data::ImageSample& sample, Rng& rng, std::span<const int> scales);

/// Every (scale, flip) combination, unflipped first within each scale.
std::vector<View> all_views(std::span<const int> scales);

}  // namespace wsddn::train
