// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "wsddn/autodiff/ops.hpp"
#include "wsddn/autodiff/optimizer.hpp"
#include "wsddn/common/random.hpp"
#include "wsddn/dataset/dataset.hpp"
#include "wsddn/evaluation/metrics.hpp"
#include "wsddn/training/trainer.hpp"

using namespace wsddn;

namespace {

ad::Tensor random_tensor(ad::Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  ad::Tensor t(std::move(shape), 0.0);
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

const data::ImageSample& default_sample() {
  static const auto sample = [] {
    data::DatasetConfig cfg;
    cfg.train_count = 1;
    cfg.test_count = 1;
    return data::generate_dataset(cfg, {}).train.samples[0];
  }();
  return sample;
}

}  // namespace

static void BM_Conv2dForwardBackward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({16, side, side}, 1);
  const auto w = random_tensor({32, 16, 3, 3}, 2);
  const auto b = random_tensor({32}, 3);
  for (auto _ : state) {
    ad::Graph g;
    auto out = ad::conv2d(g.constant(x), g.parameter("w", w), g.parameter("b", b), {1, 1});
    g.backward(ad::sum_all(out));
    benchmark::DoNotOptimize(g.grad(out.id()).data());
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Arg(16)->Arg(32);

static void BM_RoiSppPool(benchmark::State& state) {
  const auto& s = default_sample();
  const auto map = random_tensor({32, 16, 16}, 4);
  for (auto _ : state) {
    ad::Graph g;
    auto out = net::roi_spp_pool(g.constant(map), s.proposals, 4, 3);
    benchmark::DoNotOptimize(out.value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.proposals.size()));
}
BENCHMARK(BM_RoiSppPool);

static void BM_TrainingStep(benchmark::State& state) {
  const auto& s = default_sample();
  net::ModelConfig model;
  model.architecture = state.range(0) ? net::Architecture::two_stream : net::Architecture::single_stream;
  train::TrainConfig cfg;
  cfg.use_spatial_regularizer = state.range(0) == 2;
  auto params = net::initialize_parameters(model, 0);
  ad::SgdMomentum opt(cfg.momentum, cfg.weight_decay);
  for (auto _ : state) {
    ad::Graph g;
    auto vars = g.bind(params);
    auto fp = net::forward(g, vars, model, s.image, s.proposals);
    auto loss = train::image_objective(fp, model, cfg, s.proposals, s.labels, 1);
    g.backward(loss);
    opt.step(params, g.parameter_gradients(), 1e-6);
  }
}
BENCHMARK(BM_TrainingStep)->Arg(0)->Arg(1)->Arg(2)->ArgNames({"variant"})->Unit(benchmark::kMillisecond);

static void BM_Nms(benchmark::State& state) {
  const auto& s = default_sample();
  Rng rng(5);
  std::vector<eval::Detection> dets;
  for (const auto& r : s.proposals) dets.push_back({0, r, rng.uniform()});
  for (auto _ : state) benchmark::DoNotOptimize(eval::nms(dets, 0.4));
}
BENCHMARK(BM_Nms);
BENCHMARK_MAIN();
