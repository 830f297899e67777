#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fw/gradcheck.hpp"
#include "fw/ops.hpp"
#include "fw/optim.hpp"
#include "fw/parallel.hpp"
#include "fw/params.hpp"
#include "fw/weights_io.hpp"
#include "oracles.hpp"

namespace fw {
namespace {

using oracle::random_tensor;

Var<double> cvar(Tensor<double> t) { return Var<double>::constant(std::move(t)); }

TEST(Tensor, RejectsMismatchedDataLength) {
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), InvalidInput);
  EXPECT_THROW(Shape({0, 3}), InvalidInput);
  EXPECT_THROW(Shape({1, 2, 3, 4, 5}), InvalidInput);
}

TEST(Conv2d, AllOnesSumsReceptiveField) {
  auto out = conv2d(Var<float>::constant(Tensor<float>(Shape{1, 1, 3, 3}, 1.0f)),
                    Var<float>::constant(Tensor<float>(Shape{1, 1, 3, 3}, 1.0f)),
                    Var<float>::constant(Tensor<float>(Shape{1})), 0);
  ASSERT_EQ(out.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(out.value()[0], 9.0f);
}

TEST(Conv2d, CenterKernelIsIdentity) {
  std::mt19937_64 rng(1);
  auto x = random_tensor<float>(Shape{2, 1, 6, 5}, rng);
  Tensor<float> k(Shape{1, 1, 3, 3});
  k.at(0, 0, 1, 1) = 1.0f;
  auto out = conv2d(Var<float>::constant(x), Var<float>::constant(k),
                    Var<float>::constant(Tensor<float>(Shape{1})), 1);
  EXPECT_EQ(out.value(), x);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(2);
  auto x = random_tensor<double>(Shape{2, 3, 5, 5}, rng);
  auto k = random_tensor<double>(Shape{4, 3, 3, 3}, rng);
  auto b = random_tensor<double>(Shape{4}, rng);
  for (int pad : {0, 1, 2}) {
    for (int stride : {1, 2}) {
      auto got = conv2d(cvar(x), cvar(k), cvar(b), pad, stride).value();
      auto want = oracle::conv2d(x, k, b, pad, stride);
      ASSERT_EQ(got.shape(), want.shape());
      EXPECT_LT(oracle::max_rel_diff(got, want), 1e-6) << "pad " << pad << " stride " << stride;
    }
  }
}

TEST(Conv2d, RejectsBadShapes) {
  auto x = cvar(Tensor<double>(Shape{1, 2, 4, 4}));
  auto b = cvar(Tensor<double>(Shape{1}));
  EXPECT_THROW(conv2d(x, cvar(Tensor<double>(Shape{1, 3, 3, 3})), b, 1), InvalidInput);
  EXPECT_THROW(conv2d(x, cvar(Tensor<double>(Shape{1, 2, 2, 2})), b, 1), InvalidConfig);
  EXPECT_THROW(conv2d(x, cvar(Tensor<double>(Shape{1, 2, 3, 3})), b, 1, 0), InvalidConfig);
}

TEST(MaxPool2, SingleWindowAndConstant) {
  auto one = maxpool2(cvar(Tensor<double>(Shape{1, 1, 2, 2}, {1, 2, 3, 4})));
  EXPECT_EQ(one.value()[0], 4.0);
  auto flat = maxpool2(cvar(Tensor<double>(Shape{1, 2, 4, 6}, 0.25)));
  EXPECT_EQ(flat.value(), Tensor<double>(Shape{1, 2, 2, 3}, 0.25));
}

TEST(MaxPool2, MatchesWindowScan) {
  std::mt19937_64 rng(3);
  auto x = random_tensor<double>(Shape{1, 2, 8, 8}, rng);
  EXPECT_EQ(maxpool2(cvar(x)).value(), oracle::maxpool2(x));
}

TEST(MaxPool2, TiesRouteGradientToFirstMaximum) {
  auto x = Var<double>::leaf(Tensor<double>(Shape{1, 1, 2, 2}, 7.0), true);
  backward(sum(maxpool2(x)));
  EXPECT_EQ(x.grad(), Tensor<double>(Shape{1, 1, 2, 2}, {1, 0, 0, 0}));
}

TEST(MaxPool2, RejectsOddExtent) {
  EXPECT_THROW(maxpool2(cvar(Tensor<double>(Shape{1, 1, 3, 4}))), InvalidInput);
}

TEST(Relu, ClampsNegatives) {
  auto out = relu(cvar(Tensor<double>(Shape{3}, {-3, 0, 5})));
  EXPECT_EQ(out.value(), Tensor<double>(Shape{3}, {0, 0, 5}));
  auto neg = relu(cvar(Tensor<double>(Shape{4}, -2.0)));
  EXPECT_EQ(neg.value(), Tensor<double>(Shape{4}, 0.0));
}

TEST(Relu, GradientIsPositivityIndicator) {
  auto x = Var<double>::leaf(Tensor<double>(Shape{3}, {-1, 2, 0}), true);
  backward(sum(relu(x)));
  EXPECT_EQ(x.grad(), Tensor<double>(Shape{3}, {0, 1, 0}));
}

TEST(Dense, IdentityAndHandExample) {
  std::mt19937_64 rng(4);
  auto x = random_tensor<double>(Shape{3, 4}, rng);
  Tensor<double> eye(Shape{4, 4});
  for (int i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  EXPECT_EQ(dense(cvar(x), cvar(eye), cvar(Tensor<double>(Shape{4}))).value(), x);

  auto out = dense(cvar(Tensor<double>(Shape{1, 2}, {1, 2})), cvar(Tensor<double>(Shape{2, 1}, {1, 1})),
                   cvar(Tensor<double>(Shape{1}, {0.5})));
  EXPECT_EQ(out.value()[0], 3.5);
}

TEST(Dense, MatchesTripleLoopAndRejectsMismatch) {
  std::mt19937_64 rng(5);
  auto x = random_tensor<double>(Shape{5, 7}, rng);
  auto w = random_tensor<double>(Shape{7, 3}, rng);
  auto b = random_tensor<double>(Shape{3}, rng);
  EXPECT_LT(oracle::max_rel_diff(dense(cvar(x), cvar(w), cvar(b)).value(), oracle::dense(x, w, b)),
            1e-6);
  EXPECT_THROW(dense(cvar(x), cvar(Tensor<double>(Shape{6, 3})), cvar(b)), InvalidInput);
}

TEST(SoftmaxCrossEntropy, AnalyticValues) {
  std::vector<int> label{3};
  auto uniform = softmax_cross_entropy(cvar(Tensor<double>(Shape{1, 20})), label);
  EXPECT_NEAR(uniform.value()[0], std::log(20.0), 1e-12);
  EXPECT_NEAR(uniform.value()[0], 2.9957, 1e-4);

  Tensor<double> dominant(Shape{1, 20});
  dominant.at(0, 3) = 100.0;
  EXPECT_LT(softmax_cross_entropy(cvar(dominant), label).value()[0], 1e-12);
}

TEST(SoftmaxCrossEntropy, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(6);
  ParamSet<double> ps;
  ps.add("logits", random_tensor<double>(Shape{4, 6}, rng, -3, 3), true);
  std::vector<int> labels{0, 5, 2, 2};
  auto report = grad_check(
      [&](ParamScope<double>& s) { return softmax_cross_entropy(s["logits"], labels); }, ps,
      {.epsilon = 1e-5, .tolerance = 1e-5});
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(SoftmaxCrossEntropy, RejectsOutOfRangeLabel) {
  std::vector<int> bad{4};
  EXPECT_THROW(softmax_cross_entropy(cvar(Tensor<double>(Shape{1, 4})), bad), InvalidInput);
  std::vector<int> neg{-1};
  EXPECT_THROW(softmax_cross_entropy(cvar(Tensor<double>(Shape{1, 4})), neg), InvalidInput);
}

TEST(Optimizer, SgdStep) {
  ParamSet<float> ps;
  ps.add("p", Tensor<float>::scalar(1.0f), true);
  GradMap<float> g;
  g.emplace("p", Tensor<float>::scalar(0.5f));
  Optimizer<float> opt({.kind = OptimizerKind::Sgd, .lr = 0.1});
  opt.step(ps, g);
  EXPECT_FLOAT_EQ(ps.at("p").value[0], 0.95f);
}

TEST(Optimizer, FrozenEntryIgnoresGradient) {
  ParamSet<float> ps;
  ps.add("frozen", Tensor<float>::scalar(2.0f), false);
  ps.add("live", Tensor<float>::scalar(2.0f), true);
  GradMap<float> g;
  g.emplace("frozen", Tensor<float>::scalar(10.0f));
  g.emplace("live", Tensor<float>::scalar(1.0f));
  for (auto kind : {OptimizerKind::Sgd, OptimizerKind::Adam}) {
    Optimizer<float> opt({.kind = kind, .lr = 0.1});
    opt.step(ps, g);
    EXPECT_EQ(ps.at("frozen").value[0], 2.0f);
  }
  EXPECT_NE(ps.at("live").value[0], 2.0f);
}

TEST(Optimizer, AdamFirstStepMovesByLearningRate) {
  // Bias-corrected first step: m_hat = g, v_hat = g^2, so the update is
  // lr * g / (|g| + eps) = 0.001 / (1 + 1e-8).
  ParamSet<double> ps;
  ps.add("p", Tensor<double>::scalar(0.0), true);
  GradMap<double> g;
  g.emplace("p", Tensor<double>::scalar(1.0));
  Optimizer<double> opt({});
  opt.step(ps, g);
  EXPECT_NEAR(ps.at("p").value[0], -0.001 / (1.0 + 1e-8), 1e-15);
}

TEST(Optimizer, MissingGradientRejected) {
  ParamSet<float> ps;
  ps.add("p", Tensor<float>::scalar(1.0f), true);
  Optimizer<float> opt({});
  EXPECT_THROW(opt.step(ps, GradMap<float>{}), InvalidInput);
}

TEST(Optimizer, FrozenTensorsBitIdenticalAfterManySteps) {
  std::mt19937_64 rng(7);
  ParamSet<float> ps;
  ps.add("a/frozen", random_tensor<float>(Shape{3, 4}, rng), false);
  ps.add("b/live", random_tensor<float>(Shape{5}, rng), true);
  const auto initial = ps.at("a/frozen").value;
  Optimizer<float> opt({});
  for (int step = 0; step < 50; ++step) {
    GradMap<float> g;
    g.emplace("a/frozen", random_tensor<float>(Shape{3, 4}, rng));
    g.emplace("b/live", random_tensor<float>(Shape{5}, rng));
    opt.step(ps, g);
  }
  EXPECT_EQ(ps.at("a/frozen").value, initial);
}

ParamSet<double> tiny_mlp(std::uint64_t seed) {
  // 4 -> 6 -> 2 : 4*6 + 6 + 6*2 + 2 = 44 weights, plus a 6-wide frozen probe.
  std::mt19937_64 rng(seed);
  ParamSet<double> ps;
  ps.add("fc1/weight", random_tensor<double>(Shape{4, 6}, rng), true);
  ps.add("fc1/bias", random_tensor<double>(Shape{6}, rng), true);
  ps.add("fc2/weight", random_tensor<double>(Shape{6, 2}, rng), true);
  ps.add("fc2/bias", random_tensor<double>(Shape{2}, rng), true);
  ps.add("unused", random_tensor<double>(Shape{6}, rng), true);
  return ps;
}

TEST(GradCheck, TinyDenseReluNetwork) {
  auto ps = tiny_mlp(8);
  EXPECT_EQ(param_count(ps).total, 50);
  std::mt19937_64 rng(9);
  auto x = random_tensor<double>(Shape{3, 4}, rng);
  std::vector<int> labels{0, 1, 1};
  auto report = grad_check(
      [&](ParamScope<double>& s) {
        auto h = relu(dense(cvar(x), s["fc1/weight"], s["fc1/bias"]));
        return softmax_cross_entropy(dense(h, s["fc2/weight"], s["fc2/bias"]), labels);
      },
      ps, {.epsilon = 1e-5, .tolerance = 1e-6, .max_coords_per_tensor = 1000});
  EXPECT_TRUE(report.valid);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
  EXPECT_EQ(report.coords_checked, 50u);
  EXPECT_EQ(report.per_param.at("unused"), 0.0);
}

TEST(GradCheck, AllFrozenIsVacuouslyPassed) {
  ParamSet<double> ps;
  ps.add("w", Tensor<double>(Shape{3}, 1.0), false);
  auto report = grad_check([](ParamScope<double>& s) { return sum(s["w"]); }, ps);
  EXPECT_TRUE(report.per_param.empty());
  EXPECT_TRUE(report.passed);
}

TEST(GradCheck, DetectsNondeterministicForward) {
  ParamSet<double> ps;
  ps.add("w", Tensor<double>(Shape{2}, 1.0), true);
  int calls = 0;
  auto report = grad_check(
      [&](ParamScope<double>& s) {
        ++calls;
        return add(sum(s["w"]), cvar(Tensor<double>::scalar(calls)));
      },
      ps);
  EXPECT_FALSE(report.valid);
  EXPECT_FALSE(report.passed);
}

TEST(GradCheck, FrozenParametersReceiveZeroGradient) {
  ParamSet<double> ps;
  ps.add("frozen", Tensor<double>(Shape{2, 2}, 0.5), false);
  ps.add("live", Tensor<double>(Shape{2, 2}, 0.5), true);
  ParamScope<double> scope(ps, true);
  backward(sum(dense(scope["frozen"], scope["live"], cvar(Tensor<double>(Shape{2})))));
  auto grads = scope.gradients();
  EXPECT_EQ(grads.at("frozen"), Tensor<double>(Shape{2, 2}));
  EXPECT_NE(grads.at("live"), Tensor<double>(Shape{2, 2}));
}

TEST(ParamCount, CountsByFlag) {
  ParamSet<float> empty;
  auto c0 = param_count(empty);
  EXPECT_EQ(c0.total, 0);
  EXPECT_EQ(c0.trainable, 0);
  EXPECT_EQ(c0.frozen, 0);

  ParamSet<float> conv;
  add_conv_params(conv, "conv", 3, 64, 3, true, 0);
  EXPECT_EQ(param_count(conv).total, 64 * 3 * 3 * 3 + 64);
  EXPECT_EQ(param_count(conv).total, 1792);

  ParamSet<float> mixed;
  add_conv_params(mixed, "a", 3, 8, 3, false, 0);
  add_dense_params(mixed, "b", 10, 4, true, 0);
  auto c = param_count(mixed);
  EXPECT_EQ(c.frozen, 8 * 27 + 8);
  EXPECT_EQ(c.trainable, 44);
  EXPECT_EQ(c.total, c.frozen + c.trainable);
}

TEST(ParamSet, LexicographicOrderAndUniqueNames) {
  ParamSet<float> ps;
  ps.add("b", Tensor<float>::scalar(1), true);
  ps.add("a/z", Tensor<float>::scalar(1), true);
  ps.add("a", Tensor<float>::scalar(1), true);
  std::vector<std::string> names;
  for (const auto& [n, p] : ps) names.push_back(n);
  EXPECT_EQ(names, (std::vector<std::string>{"a", "a/z", "b"}));
  EXPECT_THROW(ps.add("a", Tensor<float>::scalar(1), true), InvalidInput);
}

TEST(Init, SeededPerLayerName) {
  ParamSet<float> a, b;
  add_conv_params(a, "x", 3, 4, 3, true, 11);
  add_conv_params(a, "y", 3, 4, 3, true, 11);
  add_conv_params(b, "y", 3, 4, 3, true, 11);
  EXPECT_EQ(a.at("y/weight").value, b.at("y/weight").value);
  EXPECT_NE(a.at("x/weight").value, a.at("y/weight").value);
  const float bound = std::sqrt(6.0f / 27.0f);
  for (float v : a.at("x/weight").value.values()) EXPECT_LE(std::abs(v), bound);
  EXPECT_EQ(a.at("x/bias").value, Tensor<float>(Shape{4}));
}

// sum(y * r) for a fixed random r, so every output coordinate reaches the loss
// with its own weight.
Var<double> weighted_sum(const Var<double>& y, std::mt19937_64& rng) {
  auto r = std::make_shared<Tensor<double>>(random_tensor<double>(y.shape(), rng));
  double total = 0.0;
  for (std::size_t i = 0; i < r->size(); ++i) total += y.value()[i] * (*r)[i];
  return Var<double>::make(Tensor<double>::scalar(total), {y}, [r](Node<double>& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t i = 0; i < r->size(); ++i) g[i] += self.grad[0] * (*r)[i];
  });
}

enum class OpUnderTest {
  Conv, ConvStride2, MaxPool, Relu, Dense, SoftmaxCe, Sigmoid, Bce, Add, Concat,
  Upsample, Flatten, Delta, DeltaSharedLambda, Sum
};

class OpGradientProperty : public ::testing::TestWithParam<OpUnderTest> {};

TEST_P(OpGradientProperty, HundredRandomTrials) {
  const auto op = GetParam();
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 rng(1000 * static_cast<int>(op) + trial);
    std::uniform_int_distribution<int> small(1, 3);
    const int n = small(rng), c = small(rng), h = 2 * small(rng), w = 2 * small(rng);
    const Shape vol{n, c, h, w};
    ParamSet<double> ps;
    ps.add("x", random_tensor<double>(vol, rng), true);
    const std::uint64_t readout_seed = rng();
    auto finish = [readout_seed](const Var<double>& y) {
      std::mt19937_64 r(readout_seed);
      return weighted_sum(y, r);
    };
    LossGraph graph;
    switch (op) {
      case OpUnderTest::Conv:
      case OpUnderTest::ConvStride2: {
        const int stride = op == OpUnderTest::Conv ? 1 : 2;
        ps.add("k", random_tensor<double>(Shape{2, c, 3, 3}, rng), true);
        ps.add("b", random_tensor<double>(Shape{2}, rng), true);
        graph = [&, stride](ParamScope<double>& s) {
          return finish(conv2d(s["x"], s["k"], s["b"], 1, stride));
        };
        break;
      }
      case OpUnderTest::MaxPool:
        graph = [&](ParamScope<double>& s) { return finish(maxpool2(s["x"])); };
        break;
      case OpUnderTest::Relu:
        graph = [&](ParamScope<double>& s) { return finish(relu(s["x"])); };
        break;
      case OpUnderTest::Dense:
        ps.add("w", random_tensor<double>(Shape{c * h * w, 3}, rng), true);
        ps.add("b", random_tensor<double>(Shape{3}, rng), true);
        graph = [&](ParamScope<double>& s) {
          return finish(dense(flatten(s["x"]), s["w"], s["b"]));
        };
        break;
      case OpUnderTest::SoftmaxCe: {
        std::vector<int> labels(n);
        for (auto& l : labels) l = std::uniform_int_distribution<int>(0, c * h * w - 1)(rng);
        graph = [&, labels](ParamScope<double>& s) {
          return softmax_cross_entropy(flatten(s["x"]), labels);
        };
        break;
      }
      case OpUnderTest::Sigmoid:
        graph = [&](ParamScope<double>& s) { return finish(sigmoid(s["x"])); };
        break;
      case OpUnderTest::Bce: {
        Tensor<double> targets(vol);
        for (auto& t : targets.values()) t = static_cast<double>(rng() & 1);
        graph = [&, targets](ParamScope<double>& s) {
          return binary_cross_entropy_with_logits(s["x"], targets);
        };
        break;
      }
      case OpUnderTest::Add:
        ps.add("y", random_tensor<double>(vol, rng), true);
        graph = [&](ParamScope<double>& s) { return finish(add(s["x"], s["y"])); };
        break;
      case OpUnderTest::Concat:
        ps.add("y", random_tensor<double>(Shape{n, 2, h, w}, rng), true);
        graph = [&](ParamScope<double>& s) { return finish(concat_channels(s["x"], s["y"])); };
        break;
      case OpUnderTest::Upsample:
        graph = [&](ParamScope<double>& s) { return finish(upsample_bilinear2x(s["x"])); };
        break;
      case OpUnderTest::Flatten:
        graph = [&](ParamScope<double>& s) { return finish(flatten(s["x"])); };
        break;
      case OpUnderTest::Delta:
      case OpUnderTest::DeltaSharedLambda: {
        ps.add("before", random_tensor<double>(vol, rng), true);
        const int lambdas = op == OpUnderTest::Delta ? c : 1;
        ps.add("lambda", random_tensor<double>(Shape{lambdas}, rng, 0.0, 2.0), true);
        graph = [&](ParamScope<double>& s) {
          return finish(delta_layer(s["x"], s["before"], s["lambda"]));
        };
        break;
      }
      case OpUnderTest::Sum:
        graph = [&](ParamScope<double>& s) { return sum(s["x"]); };
        break;
    }
    auto report = grad_check(graph, ps, {.epsilon = 1e-6, .tolerance = 1e-4, .seed = 1});
    ASSERT_TRUE(report.valid);
    ASSERT_TRUE(report.passed) << "trial " << trial << " max rel error " << report.max_rel_error;
  }
}

std::string op_name(const ::testing::TestParamInfo<OpUnderTest>& info) {
  static const char* const names[] = {"Conv", "ConvStride2", "MaxPool", "Relu", "Dense",
                                      "SoftmaxCe", "Sigmoid", "Bce", "Add", "Concat",
                                      "Upsample", "Flatten", "Delta", "DeltaSharedLambda", "Sum"};
  return names[static_cast<int>(info.param)];
}

INSTANTIATE_TEST_SUITE_P(
    AllOps, OpGradientProperty,
    ::testing::Values(OpUnderTest::Conv, OpUnderTest::ConvStride2, OpUnderTest::MaxPool,
                      OpUnderTest::Relu, OpUnderTest::Dense, OpUnderTest::SoftmaxCe,
                      OpUnderTest::Sigmoid, OpUnderTest::Bce, OpUnderTest::Add,
                      OpUnderTest::Concat, OpUnderTest::Upsample, OpUnderTest::Flatten,
                      OpUnderTest::Delta, OpUnderTest::DeltaSharedLambda, OpUnderTest::Sum),
    op_name);

// Random instances up to 4x8x16x16 against the naive loops.
TEST(OracleProperty, ConvPoolDenseUpToFourByEightBySixteen) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> nd(1, 4), cd(1, 8), hd(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = nd(rng), c = cd(rng), h = 2 * hd(rng), w = 2 * hd(rng);
    auto x = random_tensor<double>(Shape{n, c, h, w}, rng);
    auto k = random_tensor<double>(Shape{cd(rng), c, 3, 3}, rng);
    auto b = random_tensor<double>(Shape{k.dim(0)}, rng);
    ASSERT_LT(oracle::max_rel_diff(conv2d(cvar(x), cvar(k), cvar(b), 1).value(),
                                   oracle::conv2d(x, k, b, 1, 1)),
              1e-6);
    ASSERT_EQ(maxpool2(cvar(x)).value(), oracle::maxpool2(x));
    auto flat = x.reshape(Shape{n, c * h * w});
    auto dw = random_tensor<double>(Shape{c * h * w, cd(rng)}, rng);
    auto db = random_tensor<double>(Shape{dw.dim(1)}, rng);
    ASSERT_LT(oracle::max_rel_diff(dense(cvar(flat), cvar(dw), cvar(db)).value(),
                                   oracle::dense(flat, dw, db)),
              1e-6);
  }
}

TEST(Determinism, WorkerCountDoesNotChangeResults) {
  std::mt19937_64 rng(88);
  auto x = random_tensor<float>(Shape{5, 3, 8, 8}, rng);
  auto k = random_tensor<float>(Shape{4, 3, 3, 3}, rng);
  auto run = [&](int workers) {
    set_num_workers(workers);
    auto xv = Var<float>::leaf(x, true);
    auto kv = Var<float>::leaf(k, true);
    auto bv = Var<float>::leaf(Tensor<float>(Shape{4}), true);
    auto y = upsample_bilinear2x(maxpool2(relu(conv2d(xv, kv, bv, 1))));
    backward(sum(y));
    set_num_workers(1);
    return std::make_tuple(y.value(), xv.grad(), kv.grad(), bv.grad());
  };
  EXPECT_EQ(run(1), run(3));
}

TEST(WeightsFile, ExactBytes) {
  ParamSet<float> ps;
  ps.add("ab", Tensor<float>(Shape{2}, {1.0f, -2.0f}), false);
  std::ostringstream out;
  write_weights(out, ps);
  const std::string expected(
      "FWWT"
      "\x01\x00\x00\x00"  // version
      "\x01\x00\x00\x00"  // tensor count
      "\x02\x00"            // name length
      "ab"
      "\x00"                // trainable
      "\x01"                // rank
      "\x02\x00\x00\x00"  // dim
      "\x00\x00\x80\x3f"  // 1.0f
      "\x00\x00\x00\xc0",  // -2.0f
      4 + 4 + 4 + 2 + 2 + 1 + 1 + 4 + 8);
  EXPECT_EQ(out.str(), expected);
}

TEST(WeightsFile, RoundTripPreservesValuesAndFlags) {
  std::mt19937_64 rng(99);
  ParamSet<float> ps;
  ps.add("z/frozen", random_tensor<float>(Shape{2, 3, 3, 3}, rng), false);
  ps.add("a/live", random_tensor<float>(Shape{7}, rng), true);
  std::stringstream buf;
  write_weights(buf, ps);
  const std::string first = buf.str();
  auto loaded = read_weights(buf);
  EXPECT_TRUE(loaded == ps);
  std::ostringstream again;
  write_weights(again, loaded);
  EXPECT_EQ(again.str(), first);
}

TEST(WeightsFile, RejectsCorruptInput) {
  ParamSet<float> ps;
  ps.add("w", Tensor<float>(Shape{4}, 1.0f), true);
  std::ostringstream out;
  write_weights(out, ps);
  const std::string bytes = out.str();
  for (std::size_t cut : {std::size_t{2}, std::size_t{9}, bytes.size() - 1}) {
    std::istringstream in(bytes.substr(0, cut));
    EXPECT_THROW(read_weights(in), FormatError) << cut;
  }
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream in1(bad_magic);
  EXPECT_THROW(read_weights(in1), FormatError);
  std::string bad_version = bytes;
  bad_version[4] = 2;
  std::istringstream in2(bad_version);
  EXPECT_THROW(read_weights(in2), FormatError);
}

}  // namespace
}  // namespace fw
