// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "wsddn/autodiff/parameters.hpp"

namespace wsddn::ad {

/// Named-tensor container format, little-endian throughout:
///
///   "WSDD"                      4 bytes magic
///   version                     u32 (currently 1)
///   count                       u64 number of tensors
///   per tensor:
///     name_length               u32, followed by UTF-8 name bytes
///     rank                      u32
///     dims                      rank x u64
///     data                      product(dims) x f64
///
/// Used for checkpoints and for single-image files (*.wten).
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_tensors(const ParameterSet& tensors);

/// `source` names the origin in ParseError messages.
ParameterSet decode_tensors(std::string_view bytes, const std::string& source = "<memory>");

void write_tensors(const std::filesystem::path& path, const ParameterSet& tensors);
ParameterSet read_tensors(const std::filesystem::path& path);

}  // namespace wsddn::ad
