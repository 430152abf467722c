// SPDX-License-Identifier: Apache-2.0
#include "wsddn/overlay.hpp"

#include <algorithm>

namespace wsddn::cli {

ad::Tensor draw_overlay(const ad::Tensor& image, std::span<const eval::Detection> dets) {
  const std::size_t h = image.dim(0), w = image.dim(1);
  ad::Tensor out(ad::Shape{h, w, 3}, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, x, 0);

  double best = 0.0;
  for (const auto& d : dets) best = std::max(best, d.score);
  // Weakest first so stronger outlines win where boxes cross.
  std::vector<const eval::Detection*> order;
  for (const auto& d : dets) order.push_back(&d);
  std::stable_sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->score < b->score; });

  auto paint = [&](int x, int y, double g) {
    if (x < 0 || y < 0 || x >= static_cast<int>(w) || y >= static_cast<int>(h)) return;
    out.at(y, x, 0) = 0.0;
    out.at(y, x, 1) = g;
    out.at(y, x, 2) = 0.0;
  };
  for (const auto* d : order) {
    const double g = best > 0.0 ? 0.3 + 0.7 * d->score / best : 1.0;
    const auto& r = d->region;
    for (int x = r.x0; x < r.x1; ++x) {
      paint(x, r.y0, g);
      paint(x, r.y1 - 1, g);
    }
    for (int y = r.y0; y < r.y1; ++y) {
      paint(r.x0, y, g);
      paint(r.x1 - 1, y, g);
    }
  }
  return out;
}

}  // namespace wsddn::cli
