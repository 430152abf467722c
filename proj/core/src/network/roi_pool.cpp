// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <memory>

#include "wsddn/common/error.hpp"
#include "wsddn/network/model.hpp"

namespace wsddn::net {

Span1D project_interval(int begin_px, int end_px, std::size_t stride, std::size_t map_extent) {
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto extent = static_cast<std::ptrdiff_t>(map_extent);
  std::ptrdiff_t b = begin_px / s;              // floor; coordinates are nonnegative
  std::ptrdiff_t e = (end_px + s - 1) / s;      // ceil
  b = std::clamp<std::ptrdiff_t>(b, 0, extent - 1);
  e = std::clamp<std::ptrdiff_t>(e, 0, extent);
  if (e <= b) e = b + 1;
  return {static_cast<std::size_t>(b), static_cast<std::size_t>(e)};
}

Span1D pooling_bin(const Span1D& cells, std::size_t bin, std::size_t grid) {
  const std::size_t len = cells.end - cells.begin;
  if (len >= grid) {
    const std::size_t base = len / grid, extra = len % grid;
    const std::size_t start = bin * base + std::min(bin, extra);
    const std::size_t size = base + (bin < extra ? 1 : 0);
    return {cells.begin + start, cells.begin + start + size};
  }
  const std::size_t start = bin * len / grid;
  const std::size_t end = ((bin + 1) * len + grid - 1) / grid;
  return {cells.begin + start, cells.begin + end};
}

ad::Var roi_spp_pool(ad::Var feature_map, std::span<const Region> regions, std::size_t stride,
                     std::size_t grid) {
  if (regions.empty()) throw UsageError("roi_spp_pool: empty region list");
  if (grid == 0) throw UsageError("roi_spp_pool: grid must be at least 1x1");
  if (stride == 0) throw UsageError("roi_spp_pool: stride must be positive");
  const auto& shape = feature_map.shape();
  if (shape.size() != 3) throw UsageError("roi_spp_pool: feature map must be C x H x W");
  const std::size_t ch = shape[0], h = shape[1], w = shape[2];
  for (const auto& r : regions) {
    if (r.x0 < 0 || r.y0 < 0 || r.x1 <= r.x0 || r.y1 <= r.y0) {
      throw UsageError("roi_spp_pool: invalid region " + r.to_string());
    }
  }

  const std::size_t cells = grid * grid;
  const std::size_t width = ch * cells;
  ad::Tensor out(ad::Shape{regions.size(), width}, 0.0);
  auto argmax = std::make_shared<std::vector<std::size_t>>(regions.size() * width);
  const auto fm = feature_map.value().data();
  auto od = out.data();

  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto ys = project_interval(regions[r].y0, regions[r].y1, stride, h);
    const auto xs = project_interval(regions[r].x0, regions[r].x1, stride, w);
    for (std::size_t by = 0; by < grid; ++by) {
      const auto ybin = pooling_bin(ys, by, grid);
      for (std::size_t bx = 0; bx < grid; ++bx) {
        const auto xbin = pooling_bin(xs, bx, grid);
        for (std::size_t c = 0; c < ch; ++c) {
          std::size_t best = (c * h + ybin.begin) * w + xbin.begin;
          for (std::size_t y = ybin.begin; y < ybin.end; ++y) {
            const std::size_t row = (c * h + y) * w;
            for (std::size_t x = xbin.begin; x < xbin.end; ++x) {
              if (fm[row + x] > fm[best]) best = row + x;
            }
          }
          const std::size_t o = r * width + (c * grid + by) * grid + bx;
          od[o] = fm[best];
          (*argmax)[o] = best;
        }
      }
    }
  }

  const auto id = feature_map.id();
  return feature_map.graph().record(std::move(out), {id}, [id, argmax](ad::Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    auto gx = g.grad(id);
    for (std::size_t o = 0; o < go.size(); ++o) gx[(*argmax)[o]] += go[o];
  });
}

}  // namespace wsddn::net
