// SPDX-License-Identifier: Apache-2.0
// Independent reference implementations used only by tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wsddn/autodiff/tensor.hpp"
#include "wsddn/common/random.hpp"
#include "wsddn/evaluation/metrics.hpp"
#include "wsddn/network/region.hpp"

namespace oracle {

using wsddn::Region;
using wsddn::ad::Tensor;

inline double box_iou(const Region& a, const Region& b) {
  const double ix = std::max(0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double area_a = double(a.x1 - a.x0) * (a.y1 - a.y0);
  const double area_b = double(b.x1 - b.x0) * (b.y1 - b.y0);
  return inter / (area_a + area_b - inter);
}

/// Direct-loop convolution, CHW.
inline Tensor conv2d(const Tensor& in, const Tensor& w, const Tensor& b, std::size_t stride, std::size_t pad) {
  const auto cin = in.dim(0), h = in.dim(1), wd = in.dim(2);
  const auto cout = w.dim(0), k = w.dim(2);
  const auto ho = (h + 2 * pad - k) / stride + 1, wo = (wd + 2 * pad - k) / stride + 1;
  Tensor out({cout, ho, wo}, 0.0);
  for (std::size_t o = 0; o < cout; ++o)
    for (std::size_t y = 0; y < ho; ++y)
      for (std::size_t x = 0; x < wo; ++x) {
        double acc = b[o];
        for (std::size_t c = 0; c < cin; ++c)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              const long iy = long(y * stride + ky) - long(pad), ix = long(x * stride + kx) - long(pad);
              if (iy < 0 || ix < 0 || iy >= long(h) || ix >= long(wd)) continue;
              acc += in.at(c, std::size_t(iy), std::size_t(ix)) * w[((o * cin + c) * k + ky) * k + kx];
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

/// Crops the projected window out of the map, then max-pools the crop into
/// grid x grid bins. Returns one row of length C * grid * grid.
inline std::vector<double> crop_then_pool(const Tensor& map, const Region& r, std::size_t stride, std::size_t grid) {
  const long h = long(map.dim(1)), w = long(map.dim(2));
  const long s = long(stride);
  auto lo = [&](int px, long extent) { return std::clamp(long(std::floor(double(px) / s)), 0L, extent - 1); };
  auto hi = [&](int px, long begin, long extent) {
    return std::max(std::clamp(long(std::ceil(double(px) / s)), 0L, extent), begin + 1);
  };
  const long y0 = lo(r.y0, h), x0 = lo(r.x0, w);
  const long y1 = hi(r.y1, y0, h), x1 = hi(r.x1, x0, w);
  const long ch = y1 - y0, cw = x1 - x0;

  std::vector<std::vector<double>> crop(map.dim(0), std::vector<double>(std::size_t(ch * cw)));
  for (std::size_t c = 0; c < map.dim(0); ++c)
    for (long y = 0; y < ch; ++y)
      for (long x = 0; x < cw; ++x) crop[c][std::size_t(y * cw + x)] = map.at(c, std::size_t(y0 + y), std::size_t(x0 + x));

  auto bins = [&](long len) {
    std::vector<std::pair<long, long>> out;
    const long g = long(grid);
    if (len >= g) {
      long start = 0;
      for (long i = 0; i < g; ++i) {
        const long size = len / g + (i < len % g ? 1 : 0);
        out.emplace_back(start, start + size);
        start += size;
      }
    } else {
      for (long i = 0; i < g; ++i) out.emplace_back(i * len / g, (((i + 1) * len) + g - 1) / g);
    }
    return out;
  };
  const auto by = bins(ch), bx = bins(cw);
  std::vector<double> row;
  for (std::size_t c = 0; c < map.dim(0); ++c)
    for (const auto& [ya, yb] : by)
      for (const auto& [xa, xb] : bx) {
        double m = -INFINITY;
        for (long y = ya; y < yb; ++y)
          for (long x = xa; x < xb; ++x) m = std::max(m, crop[c][std::size_t(y * cw + x)]);
        row.push_back(m);
      }
  return row;
}

/// Greedy NMS by exhaustive rescans: repeatedly take the best surviving
/// candidate (lowest index on score ties) and suppress its overlaps.
inline std::vector<wsddn::eval::Detection> nms(const std::vector<wsddn::eval::Detection>& dets, double thr) {
  std::vector<bool> alive(dets.size(), true);
  std::vector<wsddn::eval::Detection> kept;
  for (;;) {
    long best = -1;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && (best < 0 || dets[i].score > dets[std::size_t(best)].score)) best = long(i);
    if (best < 0) break;
    const auto& top = dets[std::size_t(best)];
    kept.push_back(top);
    alive[std::size_t(best)] = false;
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (alive[i] && box_iou(top.region, dets[i].region) > thr) alive[i] = false;
  }
  return kept;
}

}  // namespace oracle

namespace gen {

using wsddn::Region;
using wsddn::ad::Tensor;

inline Region region(wsddn::Rng& rng, int w, int h, int min_side = 1) {
  Region r;
  r.x0 = rng.range(0, w - min_side);
  r.y0 = rng.range(0, h - min_side);
  r.x1 = rng.range(r.x0 + min_side, w);
  r.y1 = rng.range(r.y0 + min_side, h);
  return r;
}

inline Tensor tensor(wsddn::Rng& rng, wsddn::ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Values on a coarse lattice so exact ties and repeats are common.
inline Tensor lattice_tensor(wsddn::Rng& rng, wsddn::ad::Shape shape, int levels = 5) {
  Tensor t(std::move(shape), 0.0);
  for (double& v : t.data()) v = double(rng.below(std::uint64_t(levels)));
  return t;
}

}  // namespace gen
