// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "wsddn/autodiff/ops.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/network/model.hpp"

using namespace wsddn;
using ad::Graph;
using ad::Tensor;

namespace {

ad::ParameterVars heads(Graph& g, const Tensor& wc, const Tensor& bc, const Tensor& wd, const Tensor& bd) {
  ad::ParameterVars p;
  p.insert("fc8c.weight", g.constant(wc));
  p.insert("fc8c.bias", g.constant(bc));
  p.insert("fc8d.weight", g.constant(wd));
  p.insert("fc8d.bias", g.constant(bd));
  return p;
}

// Identity head weights: logits equal the fc7 rows.
ad::ParameterVars identity_heads(Graph& g, std::size_t d) {
  Tensor eye({d, d}, 0.0);
  for (std::size_t i = 0; i < d; ++i) eye.at(i, i) = 1.0;
  return heads(g, eye, Tensor({d}, 0.0), eye, Tensor({d}, 0.0));
}

net::ModelConfig small_model(std::size_t classes) {
  net::ModelConfig m;
  m.backbone = {{4, 3, 1, 1, true}, {6, 3, 1, 1, true}};
  m.fc6 = 8;
  m.fc7 = 8;
  m.num_classes = classes;
  return m;
}

std::vector<Region> random_regions(Rng& rng, int w, int h, std::size_t n) {
  std::vector<Region> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gen::region(rng, w, h));
  return out;
}

}  // namespace

TEST(Backbone, DefaultNetworkMaps64PixelsTo16CellsAtStride4) {
  net::ModelConfig cfg;
  auto params = net::initialize_parameters(cfg, 1);
  Graph g;
  auto fm = net::backbone_forward(g, g.bind(params), cfg, Tensor({64, 64, 1}, 0.5));
  EXPECT_EQ(fm.stride, 4u);
  EXPECT_EQ(fm.map.shape(), (ad::Shape{32, 16, 16}));
}

TEST(Backbone, ZeroImageAndZeroBiasGiveZeroMap) {
  net::ModelConfig cfg;
  auto params = net::initialize_parameters(cfg, 1);
  Graph g;
  auto fm = net::backbone_forward(g, g.bind(params), cfg, Tensor({20, 24, 1}, 0.0));
  for (double v : fm.map.value().data()) EXPECT_EQ(v, 0.0);
}

TEST(Backbone, TooSmallImageNamesTheMinimum) {
  net::ModelConfig cfg;
  auto params = net::initialize_parameters(cfg, 1);
  Graph g;
  const auto min = cfg.min_input_size();
  EXPECT_EQ(min, 4u);
  try {
    net::backbone_forward(g, g.bind(params), cfg, Tensor({3, 64, 1}, 0.0));
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("minimum input side of 4"), std::string::npos);
  }
  Graph fresh;
  EXPECT_NO_THROW(net::backbone_forward(fresh, fresh.bind(params), cfg, Tensor({min, min, 1}, 0.0)));
}

TEST(Backbone, RepeatedRunsAreBitIdentical) {
  net::ModelConfig cfg;
  auto params = net::initialize_parameters(cfg, 4);
  Rng rng(2);
  auto image = gen::tensor(rng, {32, 40, 1}, 0.0, 1.0);
  Graph g1, g2;
  EXPECT_EQ(net::backbone_forward(g1, g1.bind(params), cfg, image).map.value(),
            net::backbone_forward(g2, g2.bind(params), cfg, image).map.value());
}

TEST(RoiPool, WholeImageWithUnitGridIsGlobalMax) {
  Rng rng(5);
  auto map = gen::tensor(rng, {3, 6, 6});
  Graph g;
  std::vector<Region> r{{0, 0, 24, 24, std::nullopt}};
  auto out = net::roi_spp_pool(g.constant(map), r, 4, 1).value();
  for (std::size_t c = 0; c < 3; ++c) {
    double m = -1e9;
    for (std::size_t i = 0; i < 36; ++i) m = std::max(m, map[c * 36 + i]);
    EXPECT_EQ(out.at(0, c), m);
  }
}

TEST(RoiPool, ConstantMapPoolsToTheConstant) {
  Graph g;
  std::vector<Region> r{{3, 5, 9, 7, std::nullopt}, {0, 0, 1, 1, std::nullopt}};
  auto out = net::roi_spp_pool(g.constant(Tensor({2, 5, 5}, 0.25)), r, 2, 3).value();
  for (double v : out.data()) EXPECT_EQ(v, 0.25);
}

TEST(RoiPool, SmallFixtureMatchesCropOracle) {
  Rng rng(11);
  auto map = gen::tensor(rng, {1, 6, 6});
  Graph g;
  std::vector<Region> r{{0, 0, 4, 4, std::nullopt}};
  auto out = net::roi_spp_pool(g.constant(map), r, 1, 2).value();
  const auto ref = oracle::crop_then_pool(map, r[0], 1, 2);
  ASSERT_EQ(out.size(), ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_EQ(out[i], ref[i]);
}

TEST(RoiPool, MatchesCropThenPoolOnRandomTriples) {
  Rng rng(2024);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t c = 1 + rng.below(3), h = 1 + rng.below(8), w = 1 + rng.below(8);
    const std::size_t stride = 1 + rng.below(4), grid = 1 + rng.below(4);
    auto map = trial % 2 ? gen::lattice_tensor(rng, {c, h, w}) : gen::tensor(rng, {c, h, w});
    const auto reg = gen::region(rng, int(w * stride), int(h * stride));
    Graph g;
    std::vector<Region> rs{reg};
    auto out = net::roi_spp_pool(g.constant(map), rs, stride, grid).value();
    const auto ref = oracle::crop_then_pool(map, reg, stride, grid);
    ASSERT_EQ(out.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_EQ(out[i], ref[i]) << "trial " << trial;
  }
}

TEST(RoiPool, GradientGoesToFirstMaximalCell) {
  Graph g;
  auto map = g.parameter("m", Tensor({1, 2, 2}, {1.0, 3.0, 3.0, 0.0}));
  std::vector<Region> r{{0, 0, 2, 2, std::nullopt}};
  g.backward(ad::sum_all(net::roi_spp_pool(map, r, 1, 1)));
  EXPECT_EQ(g.gradient(map), Tensor({1, 2, 2}, {0.0, 1.0, 0.0, 0.0}));
}

TEST(RoiPool, EmptyRegionListIsAnError) {
  Graph g;
  EXPECT_THROW(net::roi_spp_pool(g.constant(Tensor({1, 2, 2}, 0.0)), {}, 1, 1), UsageError);
}

TEST(RoiPool, ProjectionWidensToAtLeastOneCell) {
  const auto s = net::project_interval(63, 64, 4, 16);
  EXPECT_EQ(s.begin, 15u);
  EXPECT_EQ(s.end, 16u);
  const auto clipped = net::project_interval(60, 64, 8, 4);
  EXPECT_EQ(clipped.begin, 3u);
  EXPECT_EQ(clipped.end, 4u);
}

TEST(BoxScore, ScalesRowsByNormalizedObjectness) {
  Graph g;
  std::vector<Region> r{{0, 0, 2, 2, 0.5}, {0, 0, 3, 3, 1.0}};
  auto out = net::box_score_scale(g.constant(Tensor({2, 2}, 1.0)), r).value();
  EXPECT_EQ(out, Tensor({2, 2}, {0.5, 0.5, 1.0, 1.0}));
}

TEST(BoxScore, EqualScoresKeepFeaturesAndZeroScoreZeroesRow) {
  Graph g;
  Tensor f({2, 2}, {1.0, -2.0, 3.0, 4.0});
  std::vector<Region> same{{0, 0, 2, 2, 0.3}, {1, 1, 3, 3, 0.3}};
  EXPECT_EQ(net::box_score_scale(g.constant(f), same).value(), f);
  std::vector<Region> zero{{0, 0, 2, 2, 0.0}, {1, 1, 3, 3, 0.7}};
  auto out = net::box_score_scale(g.constant(f), zero).value();
  EXPECT_EQ(out.at(0, 0), 0.0);
  EXPECT_EQ(out.at(0, 1), 0.0);
}

TEST(BoxScore, MissingObjectnessIsAnError) {
  Graph g;
  std::vector<Region> r{{0, 0, 2, 2, std::nullopt}};
  EXPECT_THROW(net::box_score_scale(g.constant(Tensor({1, 2}, 1.0)), r), UsageError);
}

TEST(FcStack, IdentityLayersPassNonnegativeInput) {
  Graph g;
  Tensor eye({3, 3}, 0.0);
  for (std::size_t i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  ad::ParameterVars p;
  p.insert("fc6.weight", g.constant(eye));
  p.insert("fc6.bias", g.constant(Tensor({3}, 0.0)));
  p.insert("fc7.weight", g.constant(eye));
  p.insert("fc7.bias", g.constant(Tensor({3}, 0.0)));
  Tensor x({2, 3}, {0.0, 1.5, 2.0, 3.0, 0.25, 7.0});
  EXPECT_EQ(net::fc_stack(g.constant(x), p).value(), x);

  ad::ParameterVars zero;
  zero.insert("fc6.weight", g.constant(Tensor({3, 3}, 0.0)));
  zero.insert("fc6.bias", g.constant(Tensor({3}, 0.0)));
  zero.insert("fc7.weight", g.constant(Tensor({3, 3}, 0.0)));
  zero.insert("fc7.bias", g.constant(Tensor({3}, 0.0)));
  EXPECT_EQ(net::fc_stack(g.constant(x), zero).value(), Tensor({2, 3}, 0.0));
}

TEST(FcStack, PermutingRowsPermutesOutput) {
  Rng rng(8);
  auto params = net::initialize_parameters(small_model(2), 3);
  auto x = gen::tensor(rng, {3, small_model(2).region_feature_width()});
  Graph g;
  auto pv = g.bind(params);
  auto out = net::fc_stack(g.constant(x), pv).value();
  auto permuted = net::fc_stack(ad::gather_rows(g.constant(x), {2, 0, 1}), pv).value();
  const std::size_t d = out.dim(1);
  for (std::size_t j = 0; j < d; ++j) {
    EXPECT_EQ(permuted.at(0, j), out.at(2, j));
    EXPECT_EQ(permuted.at(1, j), out.at(0, j));
  }
}

TEST(Streams, ClassificationSoftmaxHandExamples) {
  Graph g;
  auto p = identity_heads(g, 2);
  auto uniform = net::classification_stream(g.constant(Tensor({1, 2}, 0.0)), p).value();
  EXPECT_EQ(uniform, Tensor({2, 1}, {0.5, 0.5}));
  auto skewed = net::classification_stream(g.constant(Tensor({1, 2}, {std::log(1.0), std::log(3.0)})), p).value();
  EXPECT_NEAR(skewed[0], 0.25, 1e-15);
  EXPECT_NEAR(skewed[1], 0.75, 1e-15);
}

TEST(Streams, DetectionSoftmaxHandExamples) {
  Graph g;
  auto p = identity_heads(g, 1);
  auto uniform = net::detection_stream(g.constant(Tensor({3, 1}, 0.0)), p).value();
  for (double v : uniform.data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
  auto skewed = net::detection_stream(g.constant(Tensor({3, 1}, {0.0, 0.0, std::log(2.0)})), p).value();
  EXPECT_NEAR(skewed[0], 0.25, 1e-15);
  EXPECT_NEAR(skewed[2], 0.5, 1e-15);
  auto single = net::detection_stream(g.constant(Tensor({1, 1}, {42.0})), p).value();
  EXPECT_EQ(single[0], 1.0);
}

TEST(Streams, CombineAndSumHandExamples) {
  Graph g;
  auto a = g.constant(Tensor({2, 2}, {0.2, 0.8, 0.6, 0.4}));
  auto b = g.constant(Tensor({2, 2}, {0.7, 0.3, 0.1, 0.9}));
  auto x = net::combine_scores(a, b);
  const Tensor expect({2, 2}, {0.14, 0.24, 0.06, 0.36});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(x.value()[i], expect[i], 1e-15);
  auto y = net::image_scores(x).value();
  EXPECT_NEAR(y[0], 0.38, 1e-15);
  EXPECT_NEAR(y[1], 0.42, 1e-15);
  EXPECT_THROW(net::combine_scores(a, g.constant(Tensor({2, 1}, 1.0))), UsageError);
}

TEST(Streams, OneHotDetectionRowSelectsOneColumn) {
  Graph g;
  auto cls = g.constant(Tensor({1, 3}, {0.3, 0.5, 0.9}));
  auto det = g.constant(Tensor({1, 3}, {0.0, 1.0, 0.0}));
  EXPECT_EQ(net::combine_scores(cls, det).value(), Tensor({1, 3}, {0.0, 0.5, 0.0}));
}

TEST(Baseline, LogSumExpHandExamplesAndBounds) {
  Graph g;
  auto p = identity_heads(g, 1);
  auto one = net::baseline_forward(g.constant(Tensor({1, 1}, {2.5})), p);
  EXPECT_DOUBLE_EQ(one.image_scores.value()[0], 2.5);
  auto two = net::baseline_forward(g.constant(Tensor({2, 1}, 0.0)), p);
  EXPECT_NEAR(two.image_scores.value()[0], std::log(2.0), 1e-15);

  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    const std::size_t r = 1 + rng.below(10);
    auto x = gen::tensor(rng, {r, 1}, -5, 5);
    auto out = net::baseline_forward(g.constant(x), p);
    double m = -1e9;
    for (double v : x.data()) m = std::max(m, v);
    const double s = out.image_scores.value()[0];
    EXPECT_GE(s, m);
    EXPECT_LE(s, m + std::log(double(r)) + 1e-12);
  }
}

TEST(Forward, SingleClassImageScoreIsExactlyOne) {
  auto cfg = small_model(1);
  Rng rng(1);
  for (int t = 0; t < 300; ++t) {
    auto params = net::initialize_parameters(cfg, rng.next());
    for (double& v : params.at("fc8d.weight").data()) v = rng.normal() * 3.0;
    auto s = net::score_image(params, cfg, gen::tensor(rng, {24, 24, 1}, 0, 1),
                              random_regions(rng, 24, 24, 1 + rng.below(40)));
    EXPECT_EQ(s.image_scores, Tensor({1}, {1.0}));
  }
}

TEST(Forward, StreamsAreNormalizedAndScoresInOpenInterval) {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    auto cfg = small_model(2 + rng.below(4));
    auto params = net::initialize_parameters(cfg, rng.next());
    for (auto& e : params) {
      if (e.name.starts_with("fc8")) for (double& v : e.value.data()) v = rng.normal() * 2.0;
    }
    const auto regions = random_regions(rng, 20, 20, 1 + rng.below(12));
    const auto s = net::score_image(params, cfg, gen::tensor(rng, {20, 20, 1}, 0, 1), regions);
    const auto& cp = *s.class_probs;
    const auto& dp = *s.det_probs;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      double col = 0.0;
      for (std::size_t c = 0; c < cfg.num_classes; ++c) col += cp.at(c, r);
      EXPECT_NEAR(col, 1.0, 1e-12);
    }
    for (std::size_t c = 0; c < cfg.num_classes; ++c) {
      double row = 0.0;
      for (std::size_t r = 0; r < regions.size(); ++r) row += dp.at(c, r);
      EXPECT_NEAR(row, 1.0, 1e-12);
      EXPECT_GT(s.image_scores[c], 0.0);
      EXPECT_LT(s.image_scores[c], 1.0);
    }
  }
}

TEST(Forward, ClassStreamIsPerRegionWhileDetectionRenormalizes) {
  auto cfg = small_model(3);
  auto params = net::initialize_parameters(cfg, 12);
  for (auto& e : params) {
    if (e.name.starts_with("fc8")) for (double& v : e.value.data()) v *= 100.0;
  }
  Rng rng(4);
  auto image = gen::tensor(rng, {32, 32, 1}, 0, 1);
  auto regions = random_regions(rng, 32, 32, 6);
  const auto full = net::score_image(params, cfg, image, regions);
  std::vector<Region> subset(regions.begin(), regions.begin() + 3);
  const auto part = net::score_image(params, cfg, image, subset);
  bool det_changed = false;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t r = 0; r < 3; ++r) {
      EXPECT_EQ(part.class_probs->at(c, r), full.class_probs->at(c, r));
      det_changed |= part.det_probs->at(c, r) != full.det_probs->at(c, r);
    }
  }
  EXPECT_TRUE(det_changed);
}

TEST(Forward, ShiftingOneDetectionRowChangesNothing) {
  auto cfg = small_model(3);
  auto params = net::initialize_parameters(cfg, 21);
  Rng rng(5);
  auto image = gen::tensor(rng, {24, 24, 1}, 0, 1);
  auto regions = random_regions(rng, 24, 24, 7);
  const auto base = net::score_image(params, cfg, image, regions);
  params.at("fc8d.bias")[1] += 3.75;
  const auto shifted = net::score_image(params, cfg, image, regions);
  for (std::size_t i = 0; i < base.region_scores.size(); ++i) {
    EXPECT_NEAR(shifted.det_probs->data()[i], base.det_probs->data()[i], 1e-12);
    EXPECT_NEAR(shifted.region_scores[i], base.region_scores[i], 1e-12);
  }
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(shifted.image_scores[c], base.image_scores[c], 1e-12);
}

TEST(Forward, RegionsOutsideTheImageAreRejected) {
  auto cfg = small_model(2);
  auto params = net::initialize_parameters(cfg, 1);
  std::vector<Region> bad{{0, 0, 30, 10, std::nullopt}};
  EXPECT_THROW(net::score_image(params, cfg, Tensor({24, 24, 1}, 0.0), bad), UsageError);
  EXPECT_THROW(net::score_image(params, cfg, Tensor({24, 24, 1}, 0.0), {}), UsageError);
}

TEST(Parameters, CheckCatchesWrongShapesAndMissingHeads) {
  auto cfg = small_model(3);
  auto params = net::initialize_parameters(cfg, 1);
  EXPECT_NO_THROW(net::check_parameters(params, cfg));
  auto other = cfg;
  other.num_classes = 4;
  EXPECT_THROW(net::check_parameters(params, other), ConfigError);
  auto baseline = cfg;
  baseline.architecture = net::Architecture::single_stream;
  auto bp = net::initialize_parameters(baseline, 1);
  EXPECT_FALSE(bp.contains("fc8d.weight"));
  EXPECT_THROW(net::check_parameters(bp, cfg), ConfigError);
}

TEST(Parameters, InitializationIsSeedDeterministic) {
  net::ModelConfig cfg;
  EXPECT_EQ(net::initialize_parameters(cfg, 5), net::initialize_parameters(cfg, 5));
  EXPECT_FALSE(net::initialize_parameters(cfg, 5) == net::initialize_parameters(cfg, 6));
}

TEST(Forward, SaturatedClassLogitsRoundImageScoreToOne) {
  // Open-interval bound is exact arithmetic only; the loss clamp covers this.
  auto cfg = small_model(2);
  auto params = net::initialize_parameters(cfg, 5);
  params.at("fc8c.bias") = Tensor({2}, {20.0, -20.0});
  params.at("fc8c.weight").fill(0.0);
  Rng rng(3);
  const auto s = net::score_image(params, cfg, gen::tensor(rng, {20, 20, 1}, 0, 1), random_regions(rng, 20, 20, 4));
  EXPECT_EQ(s.image_scores[0], 1.0);
  EXPECT_GT(s.image_scores[1], 0.0);
}
