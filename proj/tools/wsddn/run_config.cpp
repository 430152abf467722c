// SPDX-License-Identifier: Apache-2.0
#include "wsddn/run_config.hpp"

#include <memory>

#include "CLI11.hpp"
#include "wsddn/common/error.hpp"

namespace wsddn::cli {

namespace {

// CLI11 maps [section] headers to subcommands. Here sections only prefix
// the key, so "[training] epochs = 5" sets --training.epochs.
class FlatToml : public CLI::ConfigTOML {
 public:
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> flat;
    for (auto& item : CLI::ConfigTOML::from_config(input)) {
      if (item.name == "++" || item.name == "--") continue;
      if (!item.parents.empty()) {
        std::string prefix;
        for (const auto& p : item.parents) prefix += p + ".";
        item.name = prefix + item.name;
        item.parents.clear();
      }
      flat.push_back(std::move(item));
    }
    return flat;
  }
};

}  // namespace

void register_options(CLI::App& app, RunConfig& cfg, Overrides& ov) {
  app.config_formatter(std::make_shared<FlatToml>());
  app.set_config("--config", "", "TOML-style config file ([section] + key = value)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--seed", cfg.seed, "Seed for data, initialization and training order");
  app.add_option("--variant", ov.variant, "wsddn or baseline")
      ->check(CLI::IsMember({"wsddn", "baseline"}));
  app.add_option("--box-score", ov.box_score, "Scale region features by objectness (on/off)");
  app.add_option("--spatial-reg", ov.spatial_reg, "Enable the spatial regulariser (on/off)");
  app.add_option("--multi-view", ov.multi_view, "Average scores over scales and flips at test time (on/off)");

  auto* g = app.add_option_group("paths");
  g->add_option("--paths.data", cfg.data_dir, "Dataset root (train/ and test/ inside)");
  g->add_option("--paths.run", cfg.run_dir, "Directory for checkpoint, loss log and report");

  auto& d = cfg.dataset;
  g = app.add_option_group("dataset");
  g->add_option("--dataset.classes", cfg.num_classes, "Number of shape classes (2 or 3)");
  g->add_option("--dataset.width", d.width);
  g->add_option("--dataset.height", d.height);
  g->add_option("--dataset.train_count", d.train_count);
  g->add_option("--dataset.test_count", d.test_count);
  g->add_option("--dataset.min_instances", d.min_instances);
  g->add_option("--dataset.max_instances", d.max_instances);
  g->add_option("--dataset.min_size", d.min_size);
  g->add_option("--dataset.max_size", d.max_size);
  g->add_option("--dataset.noise", d.noise_amplitude);
  g->add_option("--dataset.min_contrast", d.min_contrast);
  g->add_option("--dataset.margin", d.margin);

  auto& p = cfg.proposals;
  g = app.add_option_group("proposals");
  g->add_option("--proposals.scales", p.scales)->delimiter(',');
  g->add_option("--proposals.aspect_ratios", p.aspect_ratios)->delimiter(',');
  g->add_option("--proposals.stride", p.stride_fraction);
  g->add_option("--proposals.max", p.max_proposals);
  g->add_option("--proposals.dedupe_iou", p.dedupe_iou);

  auto& m = cfg.model;
  g = app.add_option_group("model");
  g->add_option("--model.conv_channels", cfg.conv_channels)->delimiter(',');
  g->add_option("--model.spp_grid", m.spp_grid);
  g->add_option("--model.fc6", m.fc6);
  g->add_option("--model.fc7", m.fc7);
  g->add_option("--model.box_score", m.use_box_score_scaling);

  auto& t = cfg.training;
  g = app.add_option_group("training");
  g->add_option("--training.epochs", t.epochs);
  g->add_option("--training.lr", t.lr_first, "Rate for the first half of training");
  g->add_option("--training.lr_second", cfg.lr_second, "Defaults to lr / 10");
  g->add_option("--training.switch_epoch", cfg.switch_epoch, "Defaults to epochs / 2");
  g->add_option("--training.momentum", t.momentum);
  g->add_option("--training.weight_decay", t.weight_decay);
  g->add_option("--training.spatial_reg", t.use_spatial_regularizer);
  g->add_option("--training.reg_weight", t.reg_weight);
  g->add_option("--training.reg_iou", t.reg_iou);
  g->add_option("--training.jitter", t.jitter);
  g->add_option("--training.jitter_scales", t.jitter_scales)->delimiter(',');

  auto& e = cfg.inference;
  g = app.add_option_group("eval");
  g->add_option("--eval.multi_view", e.multi_view);
  g->add_option("--eval.scales", e.scales)->delimiter(',');
  g->add_option("--eval.nms", e.nms_threshold);
}

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
  if (ov.variant) cfg.variant = *ov.variant == "baseline" ? Variant::baseline : Variant::wsddn;
  if (ov.box_score) cfg.model.use_box_score_scaling = *ov.box_score;
  if (ov.spatial_reg) cfg.training.use_spatial_regularizer = *ov.spatial_reg;
  if (ov.multi_view) cfg.inference.multi_view = *ov.multi_view;
  cfg.finalize();
}

void RunConfig::finalize() {
  const data::DatasetConfig roster;
  if (num_classes > roster.classes.size()) {
    throw ConfigError("dataset.classes: at most " + std::to_string(roster.classes.size()) +
                      " shape classes are available");
  }
  dataset.classes.assign(roster.classes.begin(), roster.classes.begin() + num_classes);
  dataset.seed = seed;
  training.seed = seed;

  if (conv_channels.empty()) throw ConfigError("model.conv_channels must list at least one layer");
  model.backbone.clear();
  for (auto c : conv_channels) model.backbone.push_back({c, 3, 1, 1, true});
  model.num_classes = num_classes;
  model.architecture = variant == Variant::wsddn ? net::Architecture::two_stream : net::Architecture::single_stream;
  if (variant == Variant::baseline && training.use_spatial_regularizer) {
    throw ConfigError("the spatial regulariser needs the two-stream model");
  }

  training.derive_schedule();
  if (lr_second) training.lr_second = *lr_second;
  if (switch_epoch) training.switch_epoch = *switch_epoch;

  dataset.validate();
  proposals.validate();
  model.validate();
  training.validate();
  if (!(inference.nms_threshold > 0.0 && inference.nms_threshold <= 1.0)) {
    throw ConfigError("eval.nms must be in (0, 1]");
  }
  if (inference.scales.empty()) throw ConfigError("eval.scales must not be empty");
}

}  // namespace wsddn::cli
