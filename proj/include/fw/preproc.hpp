#pragma once

#include <optional>

#include "fw/segnet.hpp"
#include "fw/tensor.hpp"

namespace fw {

// Square window in source-image coordinates. It may reach past the image
// borders; crop() zero-fills those parts.
struct SquareBBox {
  int row = 0;
  int col = 0;
  int side = 1;

  bool operator==(const SquareBBox&) const = default;
};

// Smallest square holding every nonzero pixel of a [1,H,W] mask, centered on
// the tight rectangle along its shorter axis (offset rounded down).
// Empty masks give nullopt.
std::optional<SquareBBox> min_square_bbox(const Tensor<float>& mask);

// [C,side,side] window of `image`; pixels outside the image are zero.
Tensor<float> crop(const Tensor<float>& image, const SquareBBox& bbox);

// Corner-aligned bilinear resize of [C,H,W] to [C,target,target].
Tensor<float> resize_bilinear(const Tensor<float>& image, int target);

// Nearest-neighbour resize of a [C,H,W] mask to [C,height,width].
Tensor<float> resize_nearest(const Tensor<float>& mask, int height, int width);

struct PreprocessedPair {
  Tensor<float> before;  // [3,target,target]
  Tensor<float> after;
  SquareBBox bbox;       // shared window in source coordinates
};

// Crops both images with the bbox of the union of the two masks and resizes
// the crops to target x target. nullopt when both masks are empty.
std::optional<PreprocessedPair> preprocess_pair_with_masks(const Tensor<float>& before,
                                                           const Tensor<float>& after,
                                                           const Tensor<float>& mask_before,
                                                           const Tensor<float>& mask_after,
                                                           int target = 224);

// Food mask of a [3,H,W] image at source resolution: the image is resized to
// the U-Net input, segmented at threshold 0.5 and mapped back.
Tensor<float> predict_mask(const UNet<float>& unet, const Tensor<float>& image);

std::optional<PreprocessedPair> preprocess_pair(const Tensor<float>& before,
                                                const Tensor<float>& after,
                                                const UNet<float>& unet, int target = 224);

}  // namespace fw
