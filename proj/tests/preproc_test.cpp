#include <gtest/gtest.h>

#include <random>

#include "fw/preproc.hpp"
#include "fw/scenegen.hpp"
#include "oracles.hpp"

namespace fw {
namespace {

using oracle::random_tensor;

Tensor<float> mask_with(int h, int w, std::initializer_list<std::pair<int, int>> pixels) {
  Tensor<float> m(Shape{1, h, w});
  for (auto [r, c] : pixels) m.at(0, r, c) = 1.0f;
  return m;
}

std::vector<std::pair<int, int>> foreground(const Tensor<float>& m) {
  std::vector<std::pair<int, int>> fg;
  for (int r = 0; r < m.dim(1); ++r)
    for (int c = 0; c < m.dim(2); ++c)
      if (m.at(0, r, c) != 0.0f) fg.emplace_back(r, c);
  return fg;
}

TEST(MinSquareBBox, Examples) {
  Tensor<float> m(Shape{1, 64, 64});
  for (int r = 10; r <= 20; ++r)
    for (int c = 30; c <= 50; ++c) m.at(0, r, c) = 1.0f;
  EXPECT_EQ(min_square_bbox(m), (SquareBBox{5, 30, 21}));
  EXPECT_EQ(min_square_bbox(mask_with(8, 8, {{0, 0}})), (SquareBBox{0, 0, 1}));
  EXPECT_EQ(min_square_bbox(Tensor<float>(Shape{1, 128, 128}, 1.0f)), (SquareBBox{0, 0, 128}));
  EXPECT_FALSE(min_square_bbox(Tensor<float>(Shape{1, 16, 16})).has_value());
}

TEST(MinSquareBBox, OddSlackRoundsTowardTheTopLeft) {
  // Rows 3..4 (2 px), cols 0..4 (5 px): slack 3 splits as 1 above, 2 below.
  const auto b = min_square_bbox(mask_with(10, 10, {{3, 0}, {4, 4}}));
  EXPECT_EQ(b, (SquareBBox{2, 0, 5}));
  // Centering near the top edge goes negative.
  EXPECT_EQ(min_square_bbox(mask_with(10, 10, {{0, 0}, {0, 6}})), (SquareBBox{-3, 0, 7}));
}

TEST(MinSquareBBox, ContainmentAndMinimalityOnRandomMasks) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> extent(1, 32);
  std::uniform_real_distribution<double> density(0.0, 0.15);
  int nonempty = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = extent(rng), w = extent(rng);
    Tensor<float> m(Shape{1, h, w});
    std::bernoulli_distribution coin(density(rng));
    for (auto& v : m.values()) v = coin(rng) ? 1.0f : 0.0f;
    const auto bbox = min_square_bbox(m);
    const auto brute = oracle::brute_min_square_side(m);
    ASSERT_EQ(bbox.has_value(), brute.has_value());
    if (!bbox) continue;
    ++nonempty;
    ASSERT_GE(bbox->side, 1);
    ASSERT_TRUE(oracle::square_contains_all(foreground(m), bbox->row, bbox->col, bbox->side));
    ASSERT_EQ(bbox->side, *brute) << "trial " << trial;
  }
  EXPECT_GT(nonempty, 900);
}

TEST(Crop, IdentityPaddingAndRejection) {
  std::mt19937_64 rng(22);
  const auto img = random_tensor<float>(Shape{3, 6, 6}, rng, 0.0, 1.0);
  EXPECT_EQ(crop(img, {0, 0, 6}), img);

  const Tensor<float> ones(Shape{1, 4, 4}, 1.0f);
  const Tensor<float> padded = crop(ones, {-2, 0, 4});
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(padded.at(0, r, c), r < 2 ? 0.0f : 1.0f);

  EXPECT_THROW(crop(img, {6, 0, 3}), InvalidInput);
  EXPECT_THROW(crop(img, {-3, -3, 3}), InvalidInput);
}

TEST(Crop, InBoundsPixelsCopiedExactly) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> size(1, 20), side(1, 24), off(-10, 20);
  for (int trial = 0; trial < 300; ++trial) {
    const int h = size(rng), w = size(rng);
    const auto img = random_tensor<float>(Shape{2, h, w}, rng);
    SquareBBox b{off(rng), off(rng), side(rng)};
    const bool overlaps = b.row < h && b.row + b.side > 0 && b.col < w && b.col + b.side > 0;
    if (!overlaps) {
      EXPECT_THROW(crop(img, b), InvalidInput);
      continue;
    }
    const Tensor<float> out = crop(img, b);
    ASSERT_EQ(out.shape(), (Shape{2, b.side, b.side}));
    for (int ch = 0; ch < 2; ++ch)
      for (int i = 0; i < b.side; ++i)
        for (int j = 0; j < b.side; ++j) {
          const int r = b.row + i, c = b.col + j;
          const bool inside = r >= 0 && r < h && c >= 0 && c < w;
          ASSERT_EQ(out.at(ch, i, j), inside ? img.at(ch, r, c) : 0.0f);
        }
  }
}

TEST(ResizeBilinear, ConstantIdentityAndHandEvaluatedRamp) {
  for (int from : {1, 3, 17}) {
    for (int to : {1, 5, 224}) {
      const Tensor<float> out = resize_bilinear(Tensor<float>(Shape{3, from, from}, 0.7f), to);
      ASSERT_EQ(out.shape(), (Shape{3, to, to}));
      for (float v : out.values()) ASSERT_NEAR(v, 0.7f, 1e-6f);
    }
  }
  std::mt19937_64 rng(24);
  const auto img = random_tensor<float>(Shape{3, 9, 9}, rng);
  EXPECT_EQ(resize_bilinear(img, 9), img);

  const Tensor<float> ramp(Shape{1, 2, 2}, {0, 1, 0, 1});
  const Tensor<float> up = resize_bilinear(ramp, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(up.at(0, r, c), c / 3.0f, 1e-6f);

  const Tensor<float> src(Shape{1, 3, 3}, {0, 1, 2, 3, 4, 5, 6, 7, 8});
  const Tensor<float> four = resize_bilinear(src, 4);
  // f(y, x) = 3y + x is bilinear, so interpolation reproduces it exactly.
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_NEAR(four.at(0, r, c), 3 * (2.0f * r / 3) + 2.0f * c / 3, 1e-5f);

  EXPECT_THROW(resize_bilinear(img, 0), InvalidConfig);
}

TEST(ResizeBilinear, PreservesValueBounds) {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> size(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto img = random_tensor<float>(Shape{2, size(rng), size(rng)}, rng, -3.0, 5.0);
    const float lo = *std::min_element(img.values().begin(), img.values().end());
    const float hi = *std::max_element(img.values().begin(), img.values().end());
    const Tensor<float> out = resize_bilinear(img, size(rng) * 3);
    for (float v : out.values()) {
      ASSERT_GE(v, lo);
      ASSERT_LE(v, hi);
    }
  }
}

TEST(ResizeNearest, IdentityAndBlockReplication) {
  const Tensor<float> m = mask_with(2, 2, {{0, 1}});
  EXPECT_EQ(resize_nearest(m, 2, 2), m);
  const Tensor<float> up = resize_nearest(m, 4, 4);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(up.at(0, r, c), (r < 2 && c >= 2) ? 1.0f : 0.0f);
  const Tensor<float> down = resize_nearest(up, 2, 2);
  EXPECT_EQ(down, m);
}

TEST(PreprocessPair, IdenticalInputsGiveIdenticalOutputs) {
  std::mt19937_64 rng(26);
  const auto img = random_tensor<float>(Shape{3, 40, 40}, rng, 0.0, 1.0);
  const Tensor<float> m = mask_with(40, 40, {{5, 7}, {20, 30}});
  const auto out = preprocess_pair_with_masks(img, img, m, m);
  ASSERT_TRUE(out.has_value());
  EXPECT_EQ(out->before.shape(), (Shape{3, 224, 224}));
  EXPECT_EQ(out->before, out->after);
}

TEST(PreprocessPair, SentinelLandsAtTheSameCoordinatesInBothOutputs) {
  std::mt19937_64 rng(27);
  std::uniform_int_distribution<int> pos(0, 47);
  for (int trial = 0; trial < 50; ++trial) {
    // Channels 0-1 differ between the images; channel 2 carries the same
    // sentinel pixel in both.
    auto before = random_tensor<float>(Shape{3, 48, 48}, rng, 0.0, 0.5);
    auto after = random_tensor<float>(Shape{3, 48, 48}, rng, 0.0, 0.5);
    Tensor<float> mb(Shape{1, 48, 48}), ma(Shape{1, 48, 48});
    const int r0 = pos(rng), c0 = pos(rng), r1 = pos(rng), c1 = pos(rng);
    mb.at(0, r0, c0) = 1.0f;
    ma.at(0, r1, c1) = 1.0f;
    for (int i = 0; i < 48; ++i)
      for (int j = 0; j < 48; ++j) before.at(2, i, j) = after.at(2, i, j) = 0.0f;
    before.at(2, r1, c1) = after.at(2, r1, c1) = 1.0f;

    const auto out = preprocess_pair_with_masks(before, after, mb, ma);
    ASSERT_TRUE(out.has_value());
    ASSERT_EQ(out->before.shape(), (Shape{3, 224, 224}));
    ASSERT_EQ(out->after.shape(), (Shape{3, 224, 224}));
    int lit = 0;
    for (int i = 0; i < 224; ++i)
      for (int j = 0; j < 224; ++j) {
        ASSERT_EQ(out->before.at(2, i, j), out->after.at(2, i, j)) << "trial " << trial;
        lit += out->before.at(2, i, j) > 0.0f ? 1 : 0;
      }
    ASSERT_GT(lit, 0);
    ASSERT_TRUE(oracle::square_contains_all({{r0, c0}, {r1, c1}}, out->bbox.row, out->bbox.col,
                                            out->bbox.side));
  }
}

TEST(PreprocessPair, SharedBoxContainsBothDepositsOfAScenePair) {
  const Episode ep = gen_episode(3, 4, 4, 5, 64);
  Tensor<float> previous(Shape{1, 64, 64});
  for (const DepositEvent& ev : ep.events) {
    const auto out = preprocess_pair_with_masks(ev.before, ev.after, previous, ev.cumulative_mask);
    ASSERT_TRUE(out.has_value());
    auto pixels = foreground(previous);
    const auto now = foreground(ev.cumulative_mask);
    pixels.insert(pixels.end(), now.begin(), now.end());
    EXPECT_TRUE(oracle::square_contains_all(pixels, out->bbox.row, out->bbox.col, out->bbox.side));
    previous = ev.cumulative_mask;
  }
}

TEST(PreprocessPair, EmptyMasksAndShapeMismatch) {
  const Tensor<float> img(Shape{3, 16, 16}, 0.5f);
  const Tensor<float> empty(Shape{1, 16, 16});
  EXPECT_FALSE(preprocess_pair_with_masks(img, img, empty, empty).has_value());
  EXPECT_THROW(preprocess_pair_with_masks(img, Tensor<float>(Shape{3, 16, 15}), empty, empty),
               InvalidInput);
}

UNet<float> saturated_unet(float head_bias) {
  UNet<float> u = build_unet(UNetConfig{16, 2, 1, 1}, 0);
  ParamSet<float> params;
  for (const auto& [name, p] : u.params) {
    Tensor<float> v = p.value;
    if (name == "head/weight") v = Tensor<float>(v.shape(), 0.0f);
    if (name == "head/bias") v = Tensor<float>(v.shape(), head_bias);
    params.add(name, v, p.trainable);
  }
  return {u.config, params};
}

TEST(PreprocessPair, UNetDrivenPipeline) {
  std::mt19937_64 rng(28);
  const auto before = random_tensor<float>(Shape{3, 40, 40}, rng, 0.0, 1.0);
  const auto after = random_tensor<float>(Shape{3, 40, 40}, rng, 0.0, 1.0);

  const auto all = preprocess_pair(before, after, saturated_unet(50.0f), 224);
  ASSERT_TRUE(all.has_value());
  EXPECT_EQ(all->bbox, (SquareBBox{0, 0, 40}));
  EXPECT_EQ(all->before, resize_bilinear(before, 224));
  EXPECT_EQ(all->after, resize_bilinear(after, 224));
  EXPECT_EQ(predict_mask(saturated_unet(50.0f), before), Tensor<float>(Shape{1, 40, 40}, 1.0f));

  EXPECT_FALSE(preprocess_pair(before, after, saturated_unet(-50.0f), 224).has_value());
  EXPECT_THROW(preprocess_pair(before, Tensor<float>(Shape{3, 32, 32}), saturated_unet(1.0f)),
               InvalidInput);
}

}  // namespace
}  // namespace fw
