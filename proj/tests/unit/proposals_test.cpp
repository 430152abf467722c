// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "wsddn/common/error.hpp"
#include "wsddn/evaluation/metrics.hpp"
#include "wsddn/proposals/proposals.hpp"

using namespace wsddn;
using proposals::ProposalConfig;

TEST(GridProposals, FullImageScaleGivesOneRegion) {
  ProposalConfig cfg;
  cfg.scales = {1.0};
  const auto r = proposals::grid_proposals(64, 64, cfg);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0], (Region{0, 0, 64, 64, std::nullopt}));
}

TEST(GridProposals, HalfScaleQuarterStrideGives25Windows) {
  ProposalConfig cfg;
  cfg.scales = {0.5};
  cfg.stride_fraction = 0.25;
  const auto r = proposals::grid_proposals(64, 64, cfg);
  ASSERT_EQ(r.size(), 25u);
  EXPECT_EQ(r[0], (Region{0, 0, 32, 32, std::nullopt}));
  EXPECT_EQ(r[1], (Region{8, 0, 40, 32, std::nullopt}));
  EXPECT_EQ(r[5], (Region{0, 8, 32, 40, std::nullopt}));
  EXPECT_EQ(r[24], (Region{32, 32, 64, 64, std::nullopt}));
}

TEST(GridProposals, EveryWindowLiesInsideTheImage) {
  Rng rng(3);
  int generated = 0;
  for (int t = 0; t < 50; ++t) {
    ProposalConfig cfg;
    cfg.scales = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
    cfg.aspect_ratios = {rng.uniform(0.5, 2.0)};
    cfg.stride_fraction = rng.uniform(0.1, 1.0);
    const int w = rng.range(16, 80), h = rng.range(16, 80);
    std::vector<Region> regions;
    try {
      regions = proposals::grid_proposals(w, h, cfg);
    } catch (const UsageError&) {
      continue;
    }
    ++generated;
    for (const auto& r : regions) {
      EXPECT_TRUE(r.inside(w, h)) << r.to_string();
      EXPECT_GE(r.area(), 1);
    }
    EXPECT_EQ(proposals::grid_proposals(w, h, cfg), regions);
  }
  EXPECT_GT(generated, 25);
}

TEST(GridProposals, ImageSmallerThanEveryWindowIsAnError) {
  ProposalConfig cfg;
  cfg.scales = {1.0};
  cfg.aspect_ratios = {4.0};
  EXPECT_THROW(proposals::grid_proposals(10, 10, cfg), UsageError);
}

TEST(GridProposals, InvalidConfigIsRejected) {
  ProposalConfig cfg;
  cfg.stride_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.scales.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Dedupe, HandExamples) {
  std::vector<Region> twice{{0, 0, 5, 5, std::nullopt}, {0, 0, 5, 5, std::nullopt}};
  EXPECT_EQ(proposals::dedupe_proposals(twice, 0.9).size(), 1u);
  std::vector<Region> disjoint{{0, 0, 2, 2, std::nullopt}, {5, 5, 7, 7, std::nullopt}};
  EXPECT_EQ(proposals::dedupe_proposals(disjoint, 0.9).size(), 2u);
  std::vector<Region> seventh{{0, 0, 2, 2, std::nullopt}, {1, 1, 3, 3, std::nullopt}};
  const auto kept = proposals::dedupe_proposals(seventh, 0.1);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0], seventh[0]);
  EXPECT_THROW(proposals::dedupe_proposals(seventh, 0.0), UsageError);
}

TEST(Objectness, ConstantImageScoresZero) {
  ad::Tensor img({16, 16, 1}, 0.7);
  std::vector<Region> r{{0, 0, 8, 8, std::nullopt}, {4, 4, 16, 16, std::nullopt}};
  for (double s : proposals::edge_density_objectness(img, r)) EXPECT_EQ(s, 0.0);
}

TEST(Objectness, StepEdgeBeatsFlatRegionAndTopIsOne) {
  ad::Tensor img({16, 16, 1}, 0.0);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 8; x < 16; ++x) img.at(y, x, 0) = 1.0;
  std::vector<Region> r{{4, 4, 12, 12, std::nullopt}, {0, 0, 4, 16, std::nullopt}};
  const auto s = proposals::edge_density_objectness(img, r);
  EXPECT_EQ(s[0], 1.0);
  EXPECT_GT(s[0], s[1]);
}

TEST(Objectness, InvariantToIntensityOffset) {
  Rng rng(5);
  auto img = gen::tensor(rng, {20, 20, 1}, 0.0, 0.5);
  auto shifted = img;
  for (double& v : shifted.data()) v += 0.25;
  std::vector<Region> r;
  for (int i = 0; i < 10; ++i) r.push_back(gen::region(rng, 20, 20));
  const auto a = proposals::edge_density_objectness(img, r);
  const auto b = proposals::edge_density_objectness(shifted, r);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Objectness, ScoresStayInUnitInterval) {
  Rng rng(6);
  auto img = gen::tensor(rng, {24, 24, 1}, 0.0, 1.0);
  std::vector<Region> r;
  for (int i = 0; i < 30; ++i) r.push_back(gen::region(rng, 24, 24));
  for (double s : proposals::edge_density_objectness(img, r)) {
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(ProposalFile, RoundTripKeepsObjectness) {
  const auto path = std::filesystem::temp_directory_path() / "wsddn_props_test.txt";
  std::vector<Region> r{{0, 0, 5, 6, 0.125}, {1, 2, 3, 4, 1.0 / 3.0}};
  proposals::write_proposals(path, r);
  EXPECT_EQ(proposals::read_proposals(path), r);
  std::filesystem::remove(path);
}
