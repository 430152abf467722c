// SPDX-License-Identifier: Apache-2.0
#include "wsddn/network/region.hpp"

#include "wsddn/common/error.hpp"

namespace wsddn {

std::string Region::to_string() const {
  return "(" + std::to_string(x0) + "," + std::to_string(y0) + "," + std::to_string(x1) + "," +
         std::to_string(y1) + ")";
}

void validate_region(const Region& r, int width, int height) {
  if (!r.inside(width, height)) {
    throw UsageError("region " + r.to_string() + " is not inside a " + std::to_string(width) + "x" +
                     std::to_string(height) + " image");
  }
  if (r.objectness && !(*r.objectness >= 0.0)) {
    throw UsageError("region " + r.to_string() + " has a negative objectness");
  }
}

}  // namespace wsddn
