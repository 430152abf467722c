// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "wsddn/autodiff/tensor.hpp"
#include "wsddn/evaluation/metrics.hpp"

namespace wsddn::cli {

/// H x W x 3 copy of a grey image with each detection's outline burned in
/// green. Brightness follows the score relative to the best detection.
ad::Tensor draw_overlay(const ad::Tensor& image, std::span<const eval::Detection> dets);

}  // namespace wsddn::cli
