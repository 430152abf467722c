// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace wsddn {

/// Axis-aligned box in image pixels, half-open: [x0, x1) x [y0, y1).
struct Region {
  int x0 = 0;
  int y0 = 0;
  int x1 = 1;
  int y1 = 1;
  /// Class-agnostic proposal score, when the proposal source provides one.
  std::optional<double> objectness;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  std::int64_t area() const noexcept {
    return static_cast<std::int64_t>(width()) * static_cast<std::int64_t>(height());
  }

  /// 0 <= x0 < x1 <= width and 0 <= y0 < y1 <= height.
  bool inside(int image_width, int image_height) const noexcept {
    return 0 <= x0 && x0 < x1 && x1 <= image_width && 0 <= y0 && y0 < y1 && y1 <= image_height;
  }

  std::string to_string() const;

  friend bool operator==(const Region&, const Region&) = default;
};

/// Throws UsageError unless `r` lies inside a `width` x `height` image.
void validate_region(const Region& r, int width, int height);

}  // namespace wsddn
