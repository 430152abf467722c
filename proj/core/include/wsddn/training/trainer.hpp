// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsddn/autodiff/graph.hpp"
#include "wsddn/autodiff/parameters.hpp"
#include "wsddn/dataset/dataset.hpp"
#include "wsddn/network/model.hpp"

namespace wsddn::train {

struct TrainConfig {
  std::size_t epochs = 20;
  double lr_first = 1e-3;
  double lr_second = 1e-4;
  std::size_t switch_epoch = 10;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  bool use_spatial_regularizer = false;
  double reg_weight = 1e-4;
  double reg_iou = 0.6;
  bool jitter = true;
  std::vector<int> jitter_scales = {48, 64, 80};
  std::uint64_t seed = 0;

  /// Sets lr_second = lr_first / 10 and switch_epoch = epochs / 2.
  void derive_schedule();
  /// ConfigError on violated ranges. `epochs` may be 0 (no training).
  void validate() const;
  /// Rate used during 0-based `epoch`.
  double learning_rate(std::size_t epoch) const;
};

/// Objective for one image of an n-image batch, without weight decay:
/// binary log loss (+ reg_weight * regulariser) for two-stream models, the
/// hinge loss for the baseline.
ad::Var image_objective(const net::ForwardPass& fp, const net::ModelConfig& model,
                        const TrainConfig& cfg, std::span<const Region> regions,
                        const data::LabelVector& labels, std::size_t batch_images);

/// (lambda / 2) |w|^2 plus the image objectives of every sample, on the
/// samples as given (no jitter).
ad::Var total_energy(ad::Graph& g, const ad::ParameterSet& params, const net::ModelConfig& model,
                     const TrainConfig& cfg, std::span<const data::ImageSample> batch);
double total_energy_value(const ad::ParameterSet& params, const net::ModelConfig& model,
                          const TrainConfig& cfg, std::span<const data::ImageSample> batch);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // mean image objective over the epoch
  double lr = 0.0;
};

/// "epoch <n> loss <value> lr <value>"
std::string format_log_line(const EpochLog& e);

struct TrainState {
  ad::ParameterSet params;
  ad::ParameterSet velocity;  // may be empty before the first step
  std::size_t epochs_done = 0;

  /// Packs parameters, "velocity/<name>" and "state/epochs_done" into one
  /// tensor set for a checkpoint.
  ad::ParameterSet to_tensors() const;
  /// Inverse of to_tensors; a plain parameter set loads with no velocity
  /// and zero completed epochs.
  static TrainState from_tensors(const ad::ParameterSet& tensors);
};

TrainState initial_state(const net::ModelConfig& model, const TrainConfig& cfg);

/// Throws UsageError naming the first image with no proposals, no positive
/// label, or a label vector of the wrong length.
void validate_training_set(const data::Dataset& dataset, std::size_t num_classes);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Runs epochs state.epochs_done .. cfg.epochs - 1, one image per SGD step
/// in an order shuffled per epoch. Each epoch's shuffle and jitter draws
/// depend only on (seed, epoch), so a resumed run matches an uninterrupted
/// one bit for bit. A non-finite objective throws NumericError naming the
/// image.
TrainState train(const data::Dataset& dataset, const net::ModelConfig& model, const TrainConfig& cfg,
                 TrainState state, const EpochCallback& on_epoch = {});

}  // namespace wsddn::train
