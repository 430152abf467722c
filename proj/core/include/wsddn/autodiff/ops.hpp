// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wsddn/autodiff/graph.hpp"

namespace wsddn::ad {

// Primitive operations. Each records a node on the graph of its inputs and
// knows its own vector-Jacobian product. Shapes are checked eagerly; a
// mismatch throws UsageError.

/// [M x K] . [K x N] -> [M x N]
Var matmul(Var a, Var b);

/// 2-D transpose.
Var transpose(Var a);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t pad = 0;
};

/// Single-image 2-D convolution in CHW layout.
/// input [Cin x H x W], weight [Cout x Cin x K x K], bias [Cout]
/// -> [Cout x Ho x Wo] with Ho = (H + 2 pad - K) / stride + 1.
Var conv2d(Var input, Var weight, Var bias, Conv2dOptions opts = {});

/// max(x, 0); the subgradient at 0 is 0.
Var relu(Var x);

/// Element-wise product of equal shapes.
Var mul(Var a, Var b);

/// Element-wise sum. `b` may also be 1-D with the extent of `a`'s last axis,
/// in which case it is added to every row.
Var add(Var a, Var b);

/// Reduces `axis` away.
Var sum(Var x, std::size_t axis);

/// Sum of all elements -> scalar.
Var sum_all(Var x);

/// 2x2 max pooling with stride 2 over CHW input; odd trailing rows/columns
/// are dropped. Ties route the gradient to the first maximal element in
/// row-major order.
Var max_pool2x2(Var x);

/// c * x
Var scale(Var x, double c);

/// Natural logarithm. Inputs must be positive.
Var log(Var x);

/// Concatenation along `axis`; other extents must agree.
Var concat(std::span<const Var> xs, std::size_t axis);

/// Softmax normalizing each slice along `axis`, stabilized by subtracting the
/// slice maximum.
Var softmax(Var x, std::size_t axis);

/// log(sum(exp(x))) along `axis`, which is reduced away.
Var logsumexp(Var x, std::size_t axis);

/// Element-wise clamp to [lo, hi]. Gradient is passed only where
/// lo < x < hi.
Var clamp(Var x, double lo, double hi);

/// Selects elements by flat row-major index -> 1-D tensor.
Var gather(Var x, std::vector<std::size_t> flat_indices);

/// Selects rows of a 2-D tensor -> [rows.size() x cols].
Var gather_rows(Var x, std::vector<std::size_t> rows);

/// Helpers shared by ops that reduce or normalize along an axis.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 1;
  std::size_t inner = 1;
};
AxisSplit split_axis(const Shape& shape, std::size_t axis);

}  // namespace wsddn::ad
