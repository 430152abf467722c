// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "oracles.hpp"
#include "wsddn/autodiff/checkpoint.hpp"
#include "wsddn/autodiff/gradcheck.hpp"
#include "wsddn/autodiff/graph.hpp"
#include "wsddn/autodiff/ops.hpp"
#include "wsddn/autodiff/optimizer.hpp"
#include "wsddn/common/error.hpp"

using namespace wsddn;
using ad::Graph;
using ad::Tensor;

TEST(Tensor, RejectsZeroExtentAndMismatchedData) {
  EXPECT_THROW(Tensor({2, 0}), UsageError);
  EXPECT_THROW(Tensor({2, 2}, std::vector<double>{1, 2, 3}), UsageError);
  EXPECT_THROW(Tensor({2}, 0.0).dim(1), UsageError);
}

TEST(Tensor, EqualityIsBitwise) {
  Tensor a({2}, {0.0, 1.0});
  Tensor b({2}, {-0.0, 1.0});
  EXPECT_FALSE(a == b);
  EXPECT_TRUE(a == Tensor({2}, {0.0, 1.0}));
  EXPECT_FALSE(a == Tensor({1, 2}, {0.0, 1.0}));
}

TEST(Graph, BackwardNeedsScalarLoss) {
  Graph g;
  auto x = g.parameter("x", Tensor({2}, {1.0, 2.0}));
  EXPECT_THROW(g.backward(x), UsageError);
}

TEST(Graph, ReusedNodeAccumulatesGradient) {
  Graph g;
  auto x = g.parameter("x", Tensor({3}, {1.0, -2.0, 0.5}));
  g.backward(ad::sum_all(ad::mul(x, x)));
  const auto dx = g.gradient(x);
  EXPECT_EQ(dx[0], 2.0);
  EXPECT_EQ(dx[1], -4.0);
  EXPECT_EQ(dx[2], 1.0);
}

TEST(Graph, UnreachedParameterHasZeroGradient) {
  Graph g;
  auto x = g.parameter("x", Tensor({2}, 1.0));
  auto y = g.parameter("y", Tensor({2}, 1.0));
  g.backward(ad::sum_all(x));
  EXPECT_EQ(g.gradient(y), Tensor({2}, 0.0));
}

TEST(Graph, SecondBackwardDoesNotAccumulate) {
  Graph g;
  auto x = g.parameter("x", Tensor({1}, 3.0));
  auto loss = ad::sum_all(ad::scale(x, 2.0));
  g.backward(loss);
  g.backward(loss);
  EXPECT_EQ(g.gradient(x)[0], 2.0);
}

TEST(Graph, DuplicateParameterNameIsRejected) {
  Graph g;
  g.parameter("w", Tensor({1}, 0.0));
  EXPECT_THROW(g.parameter("w", Tensor({1}, 0.0)), UsageError);
}

TEST(Ops, Conv2dMatchesDirectLoops) {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t cin = 1 + rng.below(3), cout = 1 + rng.below(3), k = 1 + rng.below(3);
    const std::size_t stride = 1 + rng.below(2), pad = rng.below(2);
    const std::size_t h = k + rng.below(6), w = k + rng.below(6);
    auto in = gen::tensor(rng, {cin, h, w});
    auto wt = gen::tensor(rng, {cout, cin, k, k});
    auto b = gen::tensor(rng, {cout});
    Graph g;
    auto out = ad::conv2d(g.constant(in), g.constant(wt), g.constant(b), {stride, pad}).value();
    const auto ref = oracle::conv2d(in, wt, b, stride, pad);
    ASSERT_EQ(out.shape(), ref.shape());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out[i], ref[i], 1e-12);
  }
}

TEST(Ops, MaxPoolRoutesTiesToFirstElement) {
  Graph g;
  auto x = g.parameter("x", Tensor({1, 2, 2}, {5.0, 5.0, 5.0, 1.0}));
  g.backward(ad::sum_all(ad::max_pool2x2(x)));
  EXPECT_EQ(g.gradient(x), Tensor({1, 2, 2}, {1.0, 0.0, 0.0, 0.0}));
}

TEST(Ops, MaxPoolDropsOddTrailingRowAndColumn) {
  Graph g;
  auto y = ad::max_pool2x2(g.constant(Tensor({1, 3, 5}, 1.0)));
  EXPECT_EQ(y.shape(), (ad::Shape{1, 1, 2}));
}

TEST(Ops, SoftmaxIsStableForLargeLogits) {
  Graph g;
  auto p = ad::softmax(g.constant(Tensor({1, 3}, {1000.0, 1000.0, -1000.0})), 1).value();
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_EQ(p[2], 0.0);
}

TEST(Ops, LogsumexpIsStableForLargeInputs) {
  Graph g;
  auto v = ad::logsumexp(g.constant(Tensor({2}, {800.0, 800.0})), 0).value().item();
  EXPECT_NEAR(v, 800.0 + std::log(2.0), 1e-9);
}

TEST(Ops, SumsAreCorrectlyRounded) {
  Graph g;
  EXPECT_EQ(ad::sum_all(g.constant(Tensor({3}, {1e16, 1.0, -1e16}))).value().item(), 1.0);
  auto rows = ad::sum(g.constant(Tensor({2, 3}, {0.1, 0.2, 0.3, 1e100, 1.0, -1e100})), 1).value();
  EXPECT_EQ(rows[0], 0.6);
  EXPECT_EQ(rows[1], 1.0);
}

TEST(Ops, SoftmaxSlicesSumToExactlyOne) {
  Rng rng(31);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + rng.below(200);
    Graph g;
    auto p = ad::softmax(g.constant(gen::tensor(rng, {1, n}, -8, 8)), 1);
    EXPECT_EQ(ad::sum(p, 1).value()[0], 1.0);
  }
}

TEST(Ops, LogRejectsNonPositiveInput) {
  Graph g;
  EXPECT_THROW(ad::log(g.constant(Tensor({2}, {1.0, 0.0}))), UsageError);
}

TEST(Ops, ClampPassesGradientOnlyInside) {
  Graph g;
  auto x = g.parameter("x", Tensor({3}, {-2.0, 0.5, 2.0}));
  g.backward(ad::sum_all(ad::clamp(x, 0.0, 1.0)));
  EXPECT_EQ(g.gradient(x), Tensor({3}, {0.0, 1.0, 0.0}));
}

TEST(Ops, ShapeMismatchesThrow) {
  Graph g;
  auto a = g.constant(Tensor({2, 3}, 1.0));
  auto b = g.constant(Tensor({2, 2}, 1.0));
  EXPECT_THROW(ad::matmul(a, a), UsageError);
  EXPECT_THROW(ad::mul(a, b), UsageError);
  EXPECT_THROW(ad::add(a, g.constant(Tensor({2}, 1.0))), UsageError);
  EXPECT_THROW(ad::gather_rows(a, {2}), UsageError);
}

TEST(FiniteDifference, FlagsReluKink) {
  auto f = [](const Tensor& t) { return std::max(t[0], 0.0) + t[1] * t[1]; };
  const auto fd = ad::finite_difference_gradient(f, Tensor({2}, {0.0, 3.0}));
  EXPECT_TRUE(fd.unreliable[0]);
  EXPECT_FALSE(fd.unreliable[1]);
  EXPECT_NEAR(fd.gradient[1], 6.0, 1e-8);
}

TEST(FiniteDifference, ComparisonSkipsUnreliableEntries) {
  ad::FiniteDifference fd{Tensor({2}, {0.5, 1.0}), {true, false}};
  const auto cmp = ad::compare_gradients(Tensor({2}, {100.0, 1.0}), fd);
  EXPECT_EQ(cmp.checked, 1u);
  EXPECT_EQ(cmp.skipped, 1u);
  EXPECT_EQ(cmp.worst_relative_error, 0.0);
}

TEST(Optimizer, MomentumAndDecayFollowTheUpdateRule) {
  ad::ParameterSet w, g;
  w.add("w", Tensor({1}, 2.0));
  g.add("w", Tensor({1}, 0.5));
  ad::SgdMomentum opt(0.9, 0.1);
  opt.step(w, g, 0.1);
  // v = 0.5 + 0.1 * 2 = 0.7; w = 2 - 0.07
  EXPECT_DOUBLE_EQ(w.at("w")[0], 2.0 - 0.1 * 0.7);
  opt.step(w, g, 0.1);
  const double w1 = 2.0 - 0.07;
  const double v2 = 0.9 * 0.7 + 0.5 + 0.1 * w1;
  EXPECT_DOUBLE_EQ(w.at("w")[0], w1 - 0.1 * v2);
}

TEST(Optimizer, ZeroRateLeavesParametersUnchanged) {
  ad::ParameterSet w, g;
  w.add("a", Tensor({2}, {1.0, -1.0}));
  g.add("a", Tensor({2}, {3.0, 4.0}));
  const auto before = w;
  ad::SgdMomentum opt(0.9, 5e-4);
  for (int i = 0; i < 5; ++i) opt.step(w, g, 0.0);
  EXPECT_EQ(w, before);
}

TEST(Optimizer, RejectsMismatchedGradients) {
  ad::ParameterSet w, g;
  w.add("a", Tensor({2}, 1.0));
  g.add("b", Tensor({2}, 1.0));
  ad::SgdMomentum opt(0.9, 0.0);
  EXPECT_THROW(opt.step(w, g, 0.1), UsageError);
  EXPECT_THROW(ad::SgdMomentum(1.0, 0.0), UsageError);
}

class CheckpointFile : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() / ("wsddn_ckpt_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(CheckpointFile, RoundTripIsBitExact) {
  Rng rng(9);
  ad::ParameterSet p;
  p.add("conv1.weight", gen::tensor(rng, {2, 1, 3, 3}));
  p.add("fc.bias", Tensor({4}, {-0.0, 1e-300, -2.5, 3.0}));
  p.add("step", Tensor::scalar(7.0));
  ad::write_tensors(dir_ / "m.ckpt", p);
  EXPECT_EQ(ad::read_tensors(dir_ / "m.ckpt"), p);
}

TEST_F(CheckpointFile, HeaderIsLittleEndian) {
  ad::ParameterSet p;
  p.add("x", Tensor({1}, 1.0));
  const auto bytes = ad::encode_tensors(p);
  EXPECT_EQ(bytes.substr(0, 4), "WSDD");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(bytes[5], 0);
  // 8-byte IEEE 1.0 at the tail: 00 .. 00 F0 3F
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 1]), 0x3Fu);
  EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 2]), 0xF0u);
}

TEST_F(CheckpointFile, CorruptMagicNamesFileAndOffset) {
  ad::ParameterSet p;
  p.add("x", Tensor({1}, 1.0));
  auto bytes = ad::encode_tensors(p);
  bytes[0] = 'X';
  std::ofstream(dir_ / "bad.ckpt", std::ios::binary) << bytes;
  try {
    ad::read_tensors(dir_ / "bad.ckpt");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(e.file().find("bad.ckpt"), std::string::npos);
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST_F(CheckpointFile, TruncatedAndTrailingBytesAreErrors) {
  ad::ParameterSet p;
  p.add("x", Tensor({3}, 1.0));
  const auto bytes = ad::encode_tensors(p);
  EXPECT_THROW(ad::decode_tensors(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(ad::decode_tensors(bytes + "z"), ParseError);
  EXPECT_THROW(ad::read_tensors(dir_ / "missing.ckpt"), NotFoundError);
}
