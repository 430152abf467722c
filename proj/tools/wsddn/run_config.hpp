// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "wsddn/dataset/dataset.hpp"
#include "wsddn/evaluation/inference.hpp"
#include "wsddn/network/model.hpp"
#include "wsddn/proposals/proposals.hpp"
#include "wsddn/training/trainer.hpp"

namespace CLI {
class App;
}

namespace wsddn::cli {

enum class Variant { wsddn, baseline };

/// Everything a command needs. Config files use [section] headers with
/// key = value lines; every key is also a --section.key flag.
struct RunConfig {
  std::uint64_t seed = 0;
  Variant variant = Variant::wsddn;

  std::filesystem::path data_dir = "data";
  std::filesystem::path run_dir = "run";

  std::size_t num_classes = 3;  // leading entries of the shape roster
  data::DatasetConfig dataset;
  proposals::ProposalConfig proposals;
  net::ModelConfig model;
  std::vector<std::size_t> conv_channels = {16, 32};
  train::TrainConfig training;
  std::optional<double> lr_second;
  std::optional<std::size_t> switch_epoch;
  eval::InferenceOptions inference;

  std::filesystem::path train_dir() const { return data_dir / "train"; }
  std::filesystem::path test_dir() const { return data_dir / "test"; }
  std::filesystem::path checkpoint_path() const { return run_dir / "checkpoint.wten"; }
  std::filesystem::path log_path() const { return run_dir / "loss.log"; }
  std::filesystem::path report_path() const { return run_dir / "report.txt"; }

  /// Copies the shared fields (seed, class count, layer widths, schedule)
  /// into the module configs and validates them. Throws ConfigError.
  void finalize();
};

/// Shorthand flags layered over the config keys.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<bool> box_score;
  std::optional<bool> spatial_reg;
  std::optional<bool> multi_view;
};

/// Registers --config, every --section.key option and the shorthand flags
/// on `app`.
void register_options(CLI::App& app, RunConfig& cfg, Overrides& ov);

/// Applies the shorthand flags, then finalize().
void apply_overrides(RunConfig& cfg, const Overrides& ov);

}  // namespace wsddn::cli
