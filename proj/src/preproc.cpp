#include "fw/preproc.hpp"

#include <algorithm>
#include <string>

#include "fw/error.hpp"
#include "fw/interp.hpp"

namespace fw {

std::optional<SquareBBox> min_square_bbox(const Tensor<float>& mask) {
  if (mask.rank() != 3 || mask.dim(0) != 1) {
    throw InvalidInput("min_square_bbox expects a [1,H,W] mask, got " + mask.shape().str());
  }
  const int h = mask.dim(1), w = mask.dim(2);
  int r0 = h, r1 = -1, c0 = w, c1 = -1;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (mask.at(0, i, j) == 0.0f) continue;
      r0 = std::min(r0, i);
      r1 = std::max(r1, i);
      c0 = std::min(c0, j);
      c1 = std::max(c1, j);
    }
  }
  if (r1 < 0) return std::nullopt;
  const int rows = r1 - r0 + 1, cols = c1 - c0 + 1;
  const int side = std::max(rows, cols);
  auto centered = [side](int start, int extent) {
    const int slack = side - extent;
    return start - slack / 2;
  };
  return SquareBBox{centered(r0, rows), centered(c0, cols), side};
}

Tensor<float> crop(const Tensor<float>& image, const SquareBBox& bbox) {
  if (image.rank() != 3) throw InvalidInput("crop expects [C,H,W], got " + image.shape().str());
  if (bbox.side < 1) throw InvalidInput("bbox side must be >= 1");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  const int top = std::max(0, bbox.row), bottom = std::min(h, bbox.row + bbox.side);
  const int left = std::max(0, bbox.col), right = std::min(w, bbox.col + bbox.side);
  if (top >= bottom || left >= right) {
    throw InvalidInput("bbox (" + std::to_string(bbox.row) + "," + std::to_string(bbox.col) + "," +
                       std::to_string(bbox.side) + ") does not overlap a " + std::to_string(h) +
                       "x" + std::to_string(w) + " image");
  }
  Tensor<float> out(Shape{c, bbox.side, bbox.side});
  for (int ch = 0; ch < c; ++ch) {
    for (int i = top; i < bottom; ++i) {
      for (int j = left; j < right; ++j) out.at(ch, i - bbox.row, j - bbox.col) = image.at(ch, i, j);
    }
  }
  return out;
}

Tensor<float> resize_bilinear(const Tensor<float>& image, int target) {
  if (target < 1) throw InvalidConfig("resize target must be >= 1, got " + std::to_string(target));
  if (image.rank() != 3) throw InvalidInput("resize expects [C,H,W], got " + image.shape().str());
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h == target && w == target) return image;
  const auto rows = linear_taps(h, target);
  const auto cols = linear_taps(w, target);
  Tensor<float> out(Shape{c, target, target});
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < target; ++i) {
      const LinearTap& r = rows[static_cast<std::size_t>(i)];
      for (int j = 0; j < target; ++j) {
        const LinearTap& q = cols[static_cast<std::size_t>(j)];
        const double top = image.at(ch, r.lo, q.lo) * (1 - q.frac) + image.at(ch, r.lo, q.hi) * q.frac;
        const double bot = image.at(ch, r.hi, q.lo) * (1 - q.frac) + image.at(ch, r.hi, q.hi) * q.frac;
        const double v = top * (1 - r.frac) + bot * r.frac;
        // Keep results inside the interpolated neighbourhood despite rounding.
        const float lo = std::min({image.at(ch, r.lo, q.lo), image.at(ch, r.lo, q.hi),
                                   image.at(ch, r.hi, q.lo), image.at(ch, r.hi, q.hi)});
        const float hi = std::max({image.at(ch, r.lo, q.lo), image.at(ch, r.lo, q.hi),
                                   image.at(ch, r.hi, q.lo), image.at(ch, r.hi, q.hi)});
        out.at(ch, i, j) = std::clamp(static_cast<float>(v), lo, hi);
      }
    }
  }
  return out;
}

Tensor<float> resize_nearest(const Tensor<float>& mask, int height, int width) {
  if (height < 1 || width < 1) throw InvalidConfig("resize target must be >= 1");
  if (mask.rank() != 3) throw InvalidInput("resize expects [C,H,W], got " + mask.shape().str());
  const int c = mask.dim(0), h = mask.dim(1), w = mask.dim(2);
  if (h == height && w == width) return mask;
  Tensor<float> out(Shape{c, height, width});
  // Pixel centers map to pixel centers.
  auto source = [](int o, int in, int out_size) {
    return std::min(in - 1, static_cast<int>((2LL * o + 1) * in / (2LL * out_size)));
  };
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < height; ++i) {
      const int si = source(i, h, height);
      for (int j = 0; j < width; ++j) out.at(ch, i, j) = mask.at(ch, si, source(j, w, width));
    }
  }
  return out;
}

std::optional<PreprocessedPair> preprocess_pair_with_masks(const Tensor<float>& before,
                                                           const Tensor<float>& after,
                                                           const Tensor<float>& mask_before,
                                                           const Tensor<float>& mask_after,
                                                           int target) {
  if (target < 1) throw InvalidConfig("preprocess target must be >= 1");
  if (before.rank() != 3 || before.dim(0) != 3 || !(before.shape() == after.shape())) {
    throw InvalidInput("preprocess needs two [3,H,W] images of one shape, got " +
                       before.shape().str() + " and " + after.shape().str());
  }
  const Shape mask_shape{1, before.dim(1), before.dim(2)};
  if (!(mask_before.shape() == mask_shape) || !(mask_after.shape() == mask_shape)) {
    throw InvalidInput("preprocess masks must be " + mask_shape.str());
  }
  Tensor<float> joint(mask_shape);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    joint[i] = (mask_before[i] != 0.0f || mask_after[i] != 0.0f) ? 1.0f : 0.0f;
  }
  const auto bbox = min_square_bbox(joint);
  if (!bbox) return std::nullopt;
  return PreprocessedPair{resize_bilinear(crop(before, *bbox), target),
                          resize_bilinear(crop(after, *bbox), target), *bbox};
}

Tensor<float> predict_mask(const UNet<float>& unet, const Tensor<float>& image) {
  if (image.rank() != 3 || image.dim(0) != 3) {
    throw InvalidInput("predict_mask expects [3,H,W], got " + image.shape().str());
  }
  const int size = unet.config.input_size;
  const Tensor<float> resized = resize_bilinear(image, size);
  const Tensor<float> probs = unet_forward(unet, resized.reshape(Shape{1, 3, size, size}));
  return resize_nearest(binarize(probs).reshape(Shape{1, size, size}), image.dim(1), image.dim(2));
}

std::optional<PreprocessedPair> preprocess_pair(const Tensor<float>& before,
                                                const Tensor<float>& after,
                                                const UNet<float>& unet, int target) {
  if (!(before.shape() == after.shape())) {
    throw InvalidInput("before/after shapes differ: " + before.shape().str() + " vs " +
                       after.shape().str());
  }
  return preprocess_pair_with_masks(before, after, predict_mask(unet, before),
                                    predict_mask(unet, after), target);
}

}  // namespace fw
