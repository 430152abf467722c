// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "CLI11.hpp"
#include "wsddn/commands.hpp"
#include "wsddn/common/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNumeric = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace wsddn;
  CLI::App app{"Weakly supervised detection on synthetic shapes"};
  app.name("wsddn");
  app.fallthrough();
  app.require_subcommand(1);

  cli::RunConfig cfg;
  cli::Overrides ov;
  cli::register_options(app, cfg, ov);

  bool force = false;
  auto* gen = app.add_subcommand("gen-data", "Generate the train and test splits");
  gen->add_flag("--force", force, "Replace a non-empty data directory");

  bool resume = false;
  auto* tr = app.add_subcommand("train", "Train a model on the train split");
  tr->add_flag("--resume", resume, "Continue from the run's checkpoint");

  cli::EvalOptions eval_opts;
  auto* ev = app.add_subcommand("eval", "AP on the test split, CorLoc on the train split");
  ev->add_option("--checkpoint", eval_opts.checkpoints, "Checkpoint (default <run>/checkpoint.wten)");
  ev->add_option("--ensemble", eval_opts.checkpoints, "Average the scores of several checkpoints")
      ->delimiter(',');
  ev->add_option("--detections", eval_opts.detections, "Score a detections file instead of a model")
      ->check(CLI::ExistingFile);
  ev->add_option("--report", eval_opts.report, "Report file (default <run>/report.txt)");

  cli::DetectOptions det_opts;
  auto* de = app.add_subcommand("detect", "Detections and an overlay image for one image");
  de->add_option("image-id", det_opts.image_id)->required();
  de->add_option("--checkpoint", det_opts.checkpoints);
  de->add_option("--ensemble", det_opts.checkpoints)->delimiter(',');
  de->add_option("--out", det_opts.out_dir, "Output directory (default <run>/detect)");
  de->add_option("--min-score", det_opts.min_score, "Keep detections scoring above this");

  cli::GradcheckOptions gc_opts;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  gc->add_option("--instances", gc_opts.instances, "Random instances per entry")->check(CLI::PositiveNumber);
  gc->add_option("--corrupt-gradient", gc_opts.corrupt)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    cli::apply_overrides(cfg, ov);
    if (gen->parsed()) {
      cli::cmd_gen_data(cfg, force);
    } else if (tr->parsed()) {
      cli::cmd_train(cfg, resume);
    } else if (ev->parsed()) {
      cli::cmd_eval(cfg, eval_opts);
    } else if (de->parsed()) {
      cli::cmd_detect(cfg, det_opts);
    } else if (gc->parsed()) {
      gc_opts.seed = cfg.seed;
      return cli::cmd_gradcheck(gc_opts) ? kOk : kNumeric;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kOk;
}
