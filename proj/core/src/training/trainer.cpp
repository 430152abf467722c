// SPDX-License-Identifier: Apache-2.0
#include "wsddn/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "common/text_io.hpp"
#include "wsddn/autodiff/ops.hpp"
#include "wsddn/autodiff/optimizer.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/common/random.hpp"
#include "wsddn/training/jitter.hpp"
#include "wsddn/training/losses.hpp"

namespace wsddn::train {

namespace {

constexpr const char* kVelocityPrefix = "velocity/";
constexpr const char* kEpochKey = "state/epochs_done";
constexpr std::uint64_t kInitSalt = 0x1417;
constexpr std::uint64_t kEpochSalt = 0xE90C;

}  // namespace

void TrainConfig::derive_schedule() {
  lr_second = lr_first / 10.0;
  switch_epoch = epochs / 2;
}

void TrainConfig::validate() const {
  if (!(lr_first >= 0.0) || !(lr_second >= 0.0)) throw ConfigError("train: learning rates must be nonnegative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight decay must be non-negative");
  if (!(reg_weight >= 0.0)) throw ConfigError("train: regulariser weight must be non-negative");
  if (!(reg_iou > 0.0 && reg_iou < 1.0)) throw ConfigError("train: reg_iou must lie in (0, 1)");
  for (int s : jitter_scales) {
    if (s < 8) throw ConfigError("train: jitter scales must be at least 8 pixels");
  }
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return epoch < switch_epoch ? lr_first : lr_second;
}

ad::Var image_objective(const net::ForwardPass& fp, const net::ModelConfig& model,
                        const TrainConfig& cfg, std::span<const Region> regions,
                        const data::LabelVector& labels, std::size_t batch_images) {
  if (model.architecture == net::Architecture::single_stream) {
    return baseline_loss(fp.image_scores, labels, batch_images);
  }
  auto loss = binary_log_loss(fp.image_scores, labels);
  if (cfg.use_spatial_regularizer && cfg.reg_weight > 0.0) {
    auto reg = spatial_regularizer(fp.region_scores, fp.fc7, regions, labels, cfg.reg_iou, batch_images);
    loss = ad::add(loss, ad::scale(reg, cfg.reg_weight));
  }
  return loss;
}

ad::Var total_energy(ad::Graph& g, const ad::ParameterSet& params, const net::ModelConfig& model,
                     const TrainConfig& cfg, std::span<const data::ImageSample> batch) {
  if (batch.empty()) throw UsageError("total_energy: empty batch");
  auto vars = g.bind(params);
  auto energy = ad::scale(squared_weight_norm(vars, params), cfg.weight_decay / 2.0);
  for (const auto& s : batch) {
    auto fp = net::forward(g, vars, model, s.image, s.proposals);
    energy = ad::add(energy, image_objective(fp, model, cfg, s.proposals, s.labels, batch.size()));
  }
  return energy;
}

double total_energy_value(const ad::ParameterSet& params, const net::ModelConfig& model,
                          const TrainConfig& cfg, std::span<const data::ImageSample> batch) {
  ad::Graph g;
  return total_energy(g, params, model, cfg, batch).value().item();
}

std::string format_log_line(const EpochLog& e) {
  return "epoch " + std::to_string(e.epoch) + " loss " + text::format_double(e.loss) + " lr " +
         text::format_double(e.lr);
}

ad::ParameterSet TrainState::to_tensors() const {
  ad::ParameterSet out = params;
  for (const auto& v : velocity) out.add(kVelocityPrefix + v.name, v.value);
  out.add(kEpochKey, ad::Tensor::scalar(static_cast<double>(epochs_done)));
  return out;
}

TrainState TrainState::from_tensors(const ad::ParameterSet& tensors) {
  TrainState s;
  const std::string prefix = kVelocityPrefix;
  for (const auto& e : tensors) {
    if (e.name == kEpochKey) {
      const double v = e.value.item();
      if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError("checkpoint: invalid completed-epoch count");
      s.epochs_done = static_cast<std::size_t>(v);
    } else if (e.name.starts_with(prefix)) {
      s.velocity.add(e.name.substr(prefix.size()), e.value);
    } else {
      s.params.add(e.name, e.value);
    }
  }
  return s;
}

TrainState initial_state(const net::ModelConfig& model, const TrainConfig& cfg) {
  TrainState s;
  s.params = net::initialize_parameters(model, mix_seed(cfg.seed, kInitSalt));
  return s;
}

void validate_training_set(const data::Dataset& dataset, std::size_t num_classes) {
  if (dataset.samples.empty()) throw UsageError("training set is empty");
  for (const auto& s : dataset.samples) {
    if (s.labels.size() != num_classes) {
      throw UsageError("image '" + s.id + "' has " + std::to_string(s.labels.size()) + " labels, expected " +
                       std::to_string(num_classes));
    }
    if (s.proposals.empty()) throw UsageError("image '" + s.id + "' has no region proposals");
    if (std::none_of(s.labels.begin(), s.labels.end(), [](int l) { return l == 1; })) {
      throw UsageError("image '" + s.id + "' has no positive label");
    }
  }
}

TrainState train(const data::Dataset& dataset, const net::ModelConfig& model, const TrainConfig& cfg,
                 TrainState state, const EpochCallback& on_epoch) {
  model.validate();
  cfg.validate();
  net::check_parameters(state.params, model);
  validate_training_set(dataset, model.num_classes);

  ad::SgdMomentum opt(cfg.momentum, cfg.weight_decay);
  if (!state.velocity.empty()) opt.set_velocity(state.velocity);

  const std::size_t n = dataset.samples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
    Rng rng(mix_seed(cfg.seed, kEpochSalt + epoch));
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order.begin(), order.end());
    const double lr = cfg.learning_rate(epoch);
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& original = dataset.samples[idx];
      const auto sample = cfg.jitter ? jitter(original, rng, cfg.jitter_scales) : original;
      ad::Graph g;
      auto vars = g.bind(state.params);
      const auto where = " at epoch " + std::to_string(epoch + 1) + " on image '" + original.id + "'";
      std::optional<ad::Var> loss;
      try {
        auto fp = net::forward(g, vars, model, sample.image, sample.proposals);
        loss = image_objective(fp, model, cfg, sample.proposals, sample.labels, 1);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + where);
      }
      const double value = loss->value().item();
      if (!std::isfinite(value)) throw NumericError("non-finite loss" + where);
      g.backward(*loss);
      auto grads = g.parameter_gradients();
      for (const auto& e : grads) {
        if (!e.value.all_finite()) {
          throw NumericError("non-finite gradient for '" + e.name + "'" + where);
        }
      }
      opt.step(state.params, grads, lr);
      total += value;
    }
    state.velocity = opt.velocity();
    state.epochs_done = epoch + 1;
    if (on_epoch) on_epoch({epoch + 1, total / static_cast<double>(n), lr});
  }
  return state;
}

}  // namespace wsddn::train
