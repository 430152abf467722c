// SPDX-License-Identifier: Apache-2.0
#include "wsddn/commands.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include "wsddn/autodiff/checkpoint.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/overlay.hpp"
#include "wsddn/training/gradient_suite.hpp"

namespace fs = std::filesystem;

namespace wsddn::cli {

namespace {

bool non_empty_dir(const fs::path& p) { return fs::exists(p) && !fs::is_empty(p); }

void write_text(const fs::path& path, const std::string& text, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::out | mode);
  if (!f) throw NotFoundError("cannot open " + path.string() + " for writing");
  f << text;
}

void check_class_count(const ad::ParameterSet& params, const fs::path& source, std::size_t dataset_classes) {
  if (!params.contains("fc8c.weight") || params.at("fc8c.weight").rank() != 2) {
    throw ConfigError(source.string() + ": not a model checkpoint");
  }
  const auto trained = params.at("fc8c.weight").dim(1);
  if (trained != dataset_classes) {
    throw ConfigError(source.string() + " was trained for " + std::to_string(trained) +
                      " classes, the dataset has " + std::to_string(dataset_classes));
  }
}

std::vector<ad::ParameterSet> load_models(const RunConfig& cfg, std::vector<fs::path> paths,
                                          std::size_t dataset_classes) {
  if (paths.empty()) paths.push_back(cfg.checkpoint_path());
  std::vector<ad::ParameterSet> models;
  for (const auto& p : paths) {
    auto state = train::TrainState::from_tensors(ad::read_tensors(p));
    check_class_count(state.params, p, dataset_classes);
    net::check_parameters(state.params, cfg.model);
    models.push_back(std::move(state.params));
  }
  return models;
}

void check_model_classes(const RunConfig& cfg, const data::Dataset& ds, const fs::path& where) {
  if (ds.num_classes() != cfg.model.num_classes) {
    throw ConfigError(where.string() + " has " + std::to_string(ds.num_classes()) +
                      " classes, the config has dataset.classes = " + std::to_string(cfg.model.num_classes));
  }
}

}  // namespace

void cmd_gen_data(const RunConfig& cfg, bool force) {
  if (non_empty_dir(cfg.data_dir)) {
    if (!force) {
      throw UsageError(cfg.data_dir.string() + " is not empty; pass --force to replace it");
    }
    fs::remove_all(cfg.data_dir);
  }
  const auto splits = data::generate_dataset(cfg.dataset, cfg.proposals);
  data::write_dataset(splits.train, cfg.train_dir());
  data::write_dataset(splits.test, cfg.test_dir());
  std::cout << "train " << splits.train.samples.size() << " images, test " << splits.test.samples.size()
            << " images, " << splits.train.num_classes() << " classes -> " << cfg.data_dir.string() << "\n";
}

void cmd_train(const RunConfig& cfg, bool resume) {
  const auto ds = data::read_dataset(cfg.train_dir());
  check_model_classes(cfg, ds, cfg.train_dir());
  train::validate_training_set(ds, cfg.model.num_classes);

  train::TrainState state;
  if (resume) {
    state = train::TrainState::from_tensors(ad::read_tensors(cfg.checkpoint_path()));
    check_class_count(state.params, cfg.checkpoint_path(), ds.num_classes());
    net::check_parameters(state.params, cfg.model);
    if (state.epochs_done > cfg.training.epochs) {
      throw ConfigError("checkpoint has " + std::to_string(state.epochs_done) +
                        " epochs done, more than training.epochs = " + std::to_string(cfg.training.epochs));
    }
  } else {
    state = train::initial_state(cfg.model, cfg.training);
  }

  fs::create_directories(cfg.run_dir);
  if (!resume) write_text(cfg.log_path(), "");
  const auto final_state = train::train(ds, cfg.model, cfg.training, state, [&](const train::EpochLog& e) {
    const auto line = train::format_log_line(e) + "\n";
    std::cout << line << std::flush;
    write_text(cfg.log_path(), line, std::ios::app);
  });
  ad::write_tensors(cfg.checkpoint_path(), final_state.to_tensors());
  std::cout << "checkpoint " << cfg.checkpoint_path().string() << " (" << final_state.epochs_done
            << " epochs)\n";
}

void cmd_eval(const RunConfig& cfg, const EvalOptions& opts) {
  const auto test = data::read_dataset(cfg.test_dir(), data::GtAccess::included);
  const auto train_split = data::read_dataset(cfg.train_dir(), data::GtAccess::included);
  if (test.class_names != train_split.class_names) throw ConfigError("train and test splits disagree on classes");

  std::vector<eval::ImageDetection> test_dets, train_dets;
  if (opts.detections) {
    std::set<std::string> test_ids;
    for (const auto& s : test.samples) test_ids.insert(s.id);
    for (auto& d : eval::read_detections(*opts.detections)) {
      if (d.det.class_index >= test.num_classes()) {
        throw ConfigError(opts.detections->string() + ": class index " + std::to_string(d.det.class_index) +
                          " out of range");
      }
      (test_ids.contains(d.image_id) ? test_dets : train_dets).push_back(std::move(d));
    }
  } else {
    check_model_classes(cfg, test, cfg.test_dir());
    const auto models = load_models(cfg, opts.checkpoints, test.num_classes());
    test_dets = eval::detect(models, cfg.model, test, cfg.inference);
    train_dets = eval::detect(models, cfg.model, train_split, cfg.inference);
  }
  const auto report =
      eval::evaluate(test_dets, test.ground_truth(), train_dets, train_split.ground_truth(), test.class_names);
  const auto text = report.format();
  std::cout << text;
  write_text(opts.report.value_or(cfg.report_path()), text);
}

void cmd_detect(const RunConfig& cfg, const DetectOptions& opts) {
  const data::ImageSample* sample = nullptr;
  data::Dataset split;
  for (const auto& dir : {cfg.test_dir(), cfg.train_dir()}) {
    split = data::read_dataset(dir);
    for (const auto& s : split.samples)
      if (s.id == opts.image_id) sample = &s;
    if (sample) {
      check_model_classes(cfg, split, dir);
      break;
    }
  }
  if (!sample) throw NotFoundError("no image '" + opts.image_id + "' in " + cfg.data_dir.string());

  const auto models = load_models(cfg, opts.checkpoints, split.num_classes());
  const auto scores = eval::ensemble_region_scores(models, cfg.model, *sample, cfg.inference);
  std::vector<eval::Detection> kept;
  std::vector<eval::ImageDetection> lines;
  for (auto& d : eval::detections_from_scores(scores, sample->proposals, cfg.inference.nms_threshold)) {
    if (!(d.score > opts.min_score)) continue;
    lines.push_back({sample->id, d});
    kept.push_back(std::move(d));
  }

  const auto out = opts.out_dir.value_or(cfg.run_dir / "detect");
  fs::create_directories(out);
  const auto det_path = out / (sample->id + ".det.txt");
  const auto overlay_path = out / (sample->id + ".overlay.wten");
  eval::write_detections(det_path, lines);
  ad::ParameterSet overlay;
  overlay.add("image", draw_overlay(sample->image, kept));
  ad::write_tensors(overlay_path, overlay);
  // Lines are grouped by class with the best first.
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0 && lines[i].det.class_index == lines[i - 1].det.class_index) continue;
    std::cout << "top " << split.class_names[lines[i].det.class_index] << "\t"
              << eval::format_detection_line(lines[i]) << "\n";
  }
  std::cout << lines.size() << " detections -> " << det_path.string() << ", overlay -> " << overlay_path.string()
            << "\n";
}

bool cmd_gradcheck(const GradcheckOptions& opts) {
  train::GradientSuiteOptions o;
  o.seed = opts.seed;
  o.instances_per_entry = opts.instances;
  o.corrupt = opts.corrupt;
  const auto report = train::run_gradient_suite(o);
  std::cout << report.format();
  std::cout << (report.passed() ? "PASS" : "FAIL") << " " << report.instances() << " instances\n";
  return report.passed();
}

}  // namespace wsddn::cli
