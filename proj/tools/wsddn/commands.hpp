// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsddn/run_config.hpp"

namespace wsddn::cli {

// Commands report failures by throwing the library error types; main maps
// them to exit codes.

void cmd_gen_data(const RunConfig& cfg, bool force);

void cmd_train(const RunConfig& cfg, bool resume);

struct EvalOptions {
  std::vector<std::filesystem::path> checkpoints;  // empty: the run's checkpoint
  std::optional<std::filesystem::path> detections;  // score a file instead of a model
  std::optional<std::filesystem::path> report;
};
void cmd_eval(const RunConfig& cfg, const EvalOptions& opts);

struct DetectOptions {
  std::string image_id;
  std::vector<std::filesystem::path> checkpoints;
  std::optional<std::filesystem::path> out_dir;  // default: <run>/detect
  double min_score = 0.0;
};
void cmd_detect(const RunConfig& cfg, const DetectOptions& opts);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  std::size_t instances = 5;
  std::optional<std::string> corrupt;
};
/// Returns false when any check failed.
bool cmd_gradcheck(const GradcheckOptions& opts);

}  // namespace wsddn::cli
