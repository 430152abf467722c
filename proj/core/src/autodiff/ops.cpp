// SPDX-License-Identifier: Apache-2.0
#include "wsddn/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "kernels.hpp"
#include "wsddn/common/error.hpp"

namespace wsddn::ad {

namespace {

Graph& same_graph(Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
    throw UsageError("operands belong to different graphs");
  }
  return a.graph();
}

void require_rank(Var v, std::size_t rank, const char* op) {
  if (v.value().rank() != rank) {
    throw UsageError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(v.shape()));
  }
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  return out;
}

}  // namespace

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw UsageError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw UsageError("matmul: inner extents differ: " + shape_string(a.shape()) + " . " +
                     shape_string(b.shape()));
  }
  Tensor out(Shape{m, n}, 0.0);
  kernels::gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(), m, n, k);
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib, m, n, k](Graph& g, std::size_t self) {
    const double* go = g.grad(self).data();
    if (g.requires_grad(ia)) {
      kernels::gemm_nt(go, g.value(ib).data().data(), g.grad(ia).data(), m, k, n);
    }
    if (g.requires_grad(ib)) {
      kernels::gemm_tn(g.value(ia).data().data(), go, g.grad(ib).data(), k, n, m);
    }
  });
}

Var transpose(Var a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.shape()[0], c = a.shape()[1];
  Tensor out(Shape{c, r}, 0.0);
  kernels::transpose(a.value().data().data(), out.data().data(), r, c);
  const auto ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia, r, c](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    auto ga = g.grad(ia);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += go[j * r + i];
    }
  });
}

namespace {

struct ConvGeometry {
  std::size_t cin, h, w, cout, k, stride, pad, ho, wo;
  std::size_t patch() const { return cin * k * k; }
  std::size_t pixels() const { return ho * wo; }
};

void im2col(const double* in, double* cols, const ConvGeometry& c) {
  for (std::size_t ch = 0; ch < c.cin; ++ch) {
    for (std::size_t ki = 0; ki < c.k; ++ki) {
      for (std::size_t kj = 0; kj < c.k; ++kj) {
        double* row = cols + ((ch * c.k + ki) * c.k + kj) * c.pixels();
        for (std::size_t oy = 0; oy < c.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * c.stride + ki) -
                          static_cast<std::ptrdiff_t>(c.pad);
          double* dst = row + oy * c.wo;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(c.h)) {
            std::fill(dst, dst + c.wo, 0.0);
            continue;
          }
          const double* src = in + (ch * c.h + static_cast<std::size_t>(iy)) * c.w;
          for (std::size_t ox = 0; ox < c.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * c.stride + kj) -
                            static_cast<std::ptrdiff_t>(c.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(c.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, double* in, const ConvGeometry& c) {
  for (std::size_t ch = 0; ch < c.cin; ++ch) {
    for (std::size_t ki = 0; ki < c.k; ++ki) {
      for (std::size_t kj = 0; kj < c.k; ++kj) {
        const double* row = cols + ((ch * c.k + ki) * c.k + kj) * c.pixels();
        for (std::size_t oy = 0; oy < c.ho; ++oy) {
          const auto iy = static_cast<std::ptrdiff_t>(oy * c.stride + ki) -
                          static_cast<std::ptrdiff_t>(c.pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(c.h)) continue;
          double* dst = in + (ch * c.h + static_cast<std::size_t>(iy)) * c.w;
          const double* src = row + oy * c.wo;
          for (std::size_t ox = 0; ox < c.wo; ++ox) {
            const auto ix = static_cast<std::ptrdiff_t>(ox * c.stride + kj) -
                            static_cast<std::ptrdiff_t>(c.pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(c.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(Var input, Var weight, Var bias, Conv2dOptions opts) {
  Graph& g = same_graph(input, weight);
  same_graph(input, bias);
  require_rank(input, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  require_rank(bias, 1, "conv2d bias");
  const auto& is = input.shape();
  const auto& ws = weight.shape();
  if (opts.stride == 0) throw UsageError("conv2d: stride must be positive");
  if (ws[1] != is[0] || ws[2] != ws[3]) {
    throw UsageError("conv2d: weight " + shape_string(ws) + " incompatible with input " +
                     shape_string(is));
  }
  if (bias.shape()[0] != ws[0]) throw UsageError("conv2d: bias extent differs from output channels");
  if (is[1] + 2 * opts.pad < ws[2] || is[2] + 2 * opts.pad < ws[3]) {
    throw UsageError("conv2d: kernel larger than padded input " + shape_string(is));
  }
  ConvGeometry c{is[0], is[1], is[2], ws[0], ws[2], opts.stride, opts.pad, 0, 0};
  c.ho = (c.h + 2 * c.pad - c.k) / c.stride + 1;
  c.wo = (c.w + 2 * c.pad - c.k) / c.stride + 1;

  auto cols = std::make_shared<std::vector<double>>(c.patch() * c.pixels());
  im2col(input.value().data().data(), cols->data(), c);

  Tensor out(Shape{c.cout, c.ho, c.wo}, 0.0);
  auto od = out.data();
  const auto bd = bias.value().data();
  for (std::size_t o = 0; o < c.cout; ++o) {
    std::fill(od.begin() + static_cast<std::ptrdiff_t>(o * c.pixels()),
              od.begin() + static_cast<std::ptrdiff_t>((o + 1) * c.pixels()), bd[o]);
  }
  kernels::gemm_nn(weight.value().data().data(), cols->data(), od.data(), c.cout, c.pixels(),
                   c.patch());

  const auto ii = input.id(), iw = weight.id(), ib = bias.id();
  return g.record(std::move(out), {ii, iw, ib}, [ii, iw, ib, c, cols](Graph& g, std::size_t self) {
    const double* go = g.grad(self).data();
    if (g.requires_grad(iw)) {
      kernels::gemm_nt(go, cols->data(), g.grad(iw).data(), c.cout, c.patch(), c.pixels());
    }
    if (g.requires_grad(ib)) {
      auto gb = g.grad(ib);
      for (std::size_t o = 0; o < c.cout; ++o) {
        double s = 0.0;
        for (std::size_t p = 0; p < c.pixels(); ++p) s += go[o * c.pixels() + p];
        gb[o] += s;
      }
    }
    if (g.requires_grad(ii)) {
      std::vector<double> dcols(c.patch() * c.pixels(), 0.0);
      kernels::gemm_tn(g.value(iw).data().data(), go, dcols.data(), c.patch(), c.pixels(), c.cout);
      col2im_add(dcols.data(), g.grad(ii).data(), c);
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    const auto xv = g.value(ix).data();
    auto gx = g.grad(ix);
    for (std::size_t i = 0; i < go.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += go[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  if (a.shape() != b.shape()) {
    throw UsageError("mul: shapes differ: " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] *= bv[i];
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    if (g.requires_grad(ia)) {
      const auto bv = g.value(ib).data();
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      const auto av = g.value(ia).data();
      auto gb = g.grad(ib);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const auto& as = a.shape();
  const auto& bs = b.shape();
  const bool broadcast = as != bs;
  if (broadcast && !(bs.size() == 1 && !as.empty() && as.back() == bs[0])) {
    throw UsageError("add: shapes incompatible: " + shape_string(as) + " + " + shape_string(bs));
  }
  Tensor out = a.value();
  const auto bv = b.value().data();
  auto od = out.data();
  const std::size_t width = bv.size();
  for (std::size_t i = 0; i < od.size(); ++i) od[i] += bv[broadcast ? i % width : i];
  const auto ia = a.id(), ib = b.id();
  return g.record(std::move(out), {ia, ib}, [ia, ib, broadcast, width](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    if (g.requires_grad(ia)) {
      auto ga = g.grad(ia);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (g.requires_grad(ib)) {
      auto gb = g.grad(ib);
      for (std::size_t i = 0; i < go.size(); ++i) gb[broadcast ? i % width : i] += go[i];
    }
  });
}

Var sum(Var x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis);
  Tensor out(drop_axis(x.shape(), axis), 0.0);
  const auto xv = x.value().data();
  auto od = out.data();
  kernels::ExactSum acc;
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      acc.clear();
      for (std::size_t a = 0; a < s.extent; ++a) acc.add(xv[(o * s.extent + a) * s.inner + i]);
      od[o * s.inner + i] = acc.result();
    }
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, s](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    auto gx = g.grad(ix);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t a = 0; a < s.extent; ++a) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          gx[(o * s.extent + a) * s.inner + i] += go[o * s.inner + i];
        }
      }
    }
  });
}

Var sum_all(Var x) {
  kernels::ExactSum acc;
  for (double v : x.value().data()) acc.add(v);
  const auto ix = x.id();
  return x.graph().record(Tensor::scalar(acc.result()), {ix}, [ix](Graph& g, std::size_t self) {
    const double go = g.grad(self)[0];
    for (double& v : g.grad(ix)) v += go;
  });
}

Var max_pool2x2(Var x) {
  require_rank(x, 3, "max_pool2x2");
  const std::size_t ch = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  const std::size_t ho = h / 2, wo = w / 2;
  if (ho == 0 || wo == 0) throw UsageError("max_pool2x2: input smaller than 2x2: " + shape_string(x.shape()));
  Tensor out(Shape{ch, ho, wo}, 0.0);
  auto argmax = std::make_shared<std::vector<std::size_t>>(ch * ho * wo);
  const auto xv = x.value().data();
  auto od = out.data();
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = (c * h + 2 * oy) * w + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (c * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        const std::size_t o = (c * ho + oy) * wo + ox;
        od[o] = xv[best];
        (*argmax)[o] = best;
      }
    }
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, argmax](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    auto gx = g.grad(ix);
    for (std::size_t o = 0; o < go.size(); ++o) gx[(*argmax)[o]] += go[o];
  });
}

Var scale(Var x, double c) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= c;
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, c](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    auto gx = g.grad(ix);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += c * go[i];
  });
}

Var log(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) {
    if (std::isnan(v)) throw NumericError("log: NaN input");
    if (!(v > 0.0)) throw UsageError("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    const auto xv = g.value(ix).data();
    auto gx = g.grad(ix);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] / xv[i];
  });
}

Var concat(std::span<const Var> xs, std::size_t axis) {
  if (xs.empty()) throw UsageError("concat: no inputs");
  Graph& g = xs.front().graph();
  Shape out_shape = xs.front().shape();
  if (axis >= out_shape.size()) throw UsageError("concat: axis out of range");
  out_shape[axis] = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> extents;
  for (const auto& v : xs) {
    same_graph(xs.front(), v);
    Shape s = v.shape();
    if (s.size() != out_shape.size()) throw UsageError("concat: rank mismatch");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (i != axis && s[i] != xs.front().shape()[i]) throw UsageError("concat: extent mismatch");
    }
    out_shape[axis] += s[axis];
    extents.push_back(s[axis]);
    ids.push_back(v.id());
  }
  const auto split = split_axis(out_shape, axis);
  Tensor out(out_shape, 0.0);
  auto od = out.data();
  std::size_t offset = 0;
  for (std::size_t n = 0; n < xs.size(); ++n) {
    const auto xv = xs[n].value().data();
    const std::size_t e = extents[n];
    for (std::size_t o = 0; o < split.outer; ++o) {
      std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(o * e * split.inner), e * split.inner,
                  od.begin() + static_cast<std::ptrdiff_t>((o * split.extent + offset) * split.inner));
    }
    offset += e;
  }
  return g.record(std::move(out), ids, [ids, extents, split](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    std::size_t offset = 0;
    for (std::size_t n = 0; n < ids.size(); ++n) {
      const std::size_t e = extents[n];
      if (g.requires_grad(ids[n])) {
        auto gx = g.grad(ids[n]);
        for (std::size_t o = 0; o < split.outer; ++o) {
          for (std::size_t j = 0; j < e * split.inner; ++j) {
            gx[o * e * split.inner + j] += go[(o * split.extent + offset) * split.inner + j];
          }
        }
      }
      offset += e;
    }
  });
}

Var softmax(Var x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis);
  Tensor out = x.value();
  auto od = out.data();
  kernels::ExactSum acc;
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      auto at = [&](std::size_t a) -> double& { return od[(o * s.extent + a) * s.inner + i]; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < s.extent; ++a) mx = std::max(mx, at(a));
      acc.clear();
      for (std::size_t a = 0; a < s.extent; ++a) {
        at(a) = std::exp(at(a) - mx);
        acc.add(at(a));
      }
      const double z = acc.result();
      std::size_t top = 0;
      acc.clear();
      acc.add(-1.0);
      for (std::size_t a = 0; a < s.extent; ++a) {
        at(a) /= z;
        acc.add(at(a));
        if (at(a) > at(top)) top = a;
      }
      // The largest entry absorbs the rounding residual so that the slice
      // sums to one under exact summation.
      at(top) -= acc.result();
    }
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, s](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    const auto y = g.value(self).data();
    auto gx = g.grad(ix);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        double dot = 0.0;
        for (std::size_t a = 0; a < s.extent; ++a) {
          const auto k = (o * s.extent + a) * s.inner + i;
          dot += go[k] * y[k];
        }
        for (std::size_t a = 0; a < s.extent; ++a) {
          const auto k = (o * s.extent + a) * s.inner + i;
          gx[k] += y[k] * (go[k] - dot);
        }
      }
    }
  });
}

Var logsumexp(Var x, std::size_t axis) {
  const auto s = split_axis(x.shape(), axis);
  Tensor out(drop_axis(x.shape(), axis), 0.0);
  const auto xv = x.value().data();
  auto od = out.data();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < s.extent; ++a) mx = std::max(mx, xv[(o * s.extent + a) * s.inner + i]);
      double z = 0.0;
      for (std::size_t a = 0; a < s.extent; ++a) z += std::exp(xv[(o * s.extent + a) * s.inner + i] - mx);
      od[o * s.inner + i] = mx + std::log(z);
    }
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, s](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    const auto y = g.value(self).data();
    const auto xv = g.value(ix).data();
    auto gx = g.grad(ix);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        const double lse = y[o * s.inner + i];
        const double gi = go[o * s.inner + i];
        for (std::size_t a = 0; a < s.extent; ++a) {
          const auto k = (o * s.extent + a) * s.inner + i;
          gx[k] += gi * std::exp(xv[k] - lse);
        }
      }
    }
  });
}

Var clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw UsageError("clamp: lo > hi");
  Tensor out = x.value();
  for (double& v : out.data()) v = std::clamp(v, lo, hi);
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, lo, hi](Graph& g, std::size_t self) {
    const auto go = g.grad(self);
    const auto xv = g.value(ix).data();
    auto gx = g.grad(ix);
    for (std::size_t i = 0; i < go.size(); ++i) {
      if (xv[i] > lo && xv[i] < hi) gx[i] += go[i];
    }
  });
}

Var gather(Var x, std::vector<std::size_t> flat_indices) {
  if (flat_indices.empty()) throw UsageError("gather: no indices");
  const auto xv = x.value().data();
  Tensor out(Shape{flat_indices.size()}, 0.0);
  for (std::size_t i = 0; i < flat_indices.size(); ++i) {
    if (flat_indices[i] >= xv.size()) throw UsageError("gather: index out of range");
    out[i] = xv[flat_indices[i]];
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix},
                          [ix, idx = std::move(flat_indices)](Graph& g, std::size_t self) {
                            const auto go = g.grad(self);
                            auto gx = g.grad(ix);
                            for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += go[i];
                          });
}

Var gather_rows(Var x, std::vector<std::size_t> rows) {
  require_rank(x, 2, "gather_rows");
  if (rows.empty()) throw UsageError("gather_rows: no rows");
  const std::size_t n = x.shape()[0], cols = x.shape()[1];
  Tensor out(Shape{rows.size(), cols}, 0.0);
  const auto xv = x.value().data();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= n) throw UsageError("gather_rows: row out of range");
    std::copy_n(xv.begin() + static_cast<std::ptrdiff_t>(rows[r] * cols), cols,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix},
                          [ix, cols, rows = std::move(rows)](Graph& g, std::size_t self) {
                            const auto go = g.grad(self);
                            auto gx = g.grad(ix);
                            for (std::size_t r = 0; r < rows.size(); ++r) {
                              for (std::size_t j = 0; j < cols; ++j) {
                                gx[rows[r] * cols + j] += go[r * cols + j];
                              }
                            }
                          });
}

}  // namespace wsddn::ad
