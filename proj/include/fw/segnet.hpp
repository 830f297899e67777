#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fw/ops.hpp"
#include "fw/optim.hpp"
#include "fw/params.hpp"

namespace fw {

// U-Net for binary food/background segmentation. The encoder halves
// resolution and doubles width per level; the decoder upsamples bilinearly
// (no learned weights), concatenates the skip connection and convolves.
struct UNetConfig {
  int input_size = 128;
  int base_channels = 34;
  int depth = 4;
  int convs_per_block = 2;

  // 128x128 input, 19 conv layers, ~8.86M parameters.
  static UNetConfig paper_scale() { return {}; }
  static UNetConfig toy() { return {64, 8, 3, 2}; }

  void validate() const;
  // Encoder and bottleneck blocks, decoder blocks, and the 1x1 head.
  int conv_layer_count() const {
    return (depth + 1) * convs_per_block + depth * convs_per_block + 1;
  }
};

template <typename T>
struct UNet {
  UNetConfig config;
  ParamSet<T> params;
};

UNet<float> build_unet(const UNetConfig& config, std::uint64_t seed);

// Per-pixel logits [N,1,S,S] for images [N,3,S,S].
template <typename T>
Var<T> unet_logits(const UNetConfig& config, ParamScope<T>& scope, const Var<T>& images);

// Per-pixel food probabilities [N,1,S,S].
template <typename T>
Tensor<T> unet_forward(const UNet<T>& model, const Tensor<T>& images);

// 1 where p >= threshold, else 0.
Tensor<float> binarize(const Tensor<float>& probs, float threshold = 0.5f);

// Fraction of equal pixels between two binary masks of the same shape.
double pixel_accuracy(const Tensor<float>& predicted, const Tensor<float>& truth);

struct MaskSample {
  Tensor<float> image;  // [3,S,S], values in [0,1]
  Tensor<float> mask;   // [1,S,S], values in {0,1}
};

// A dihedral transform applied identically to image and mask:
// flips first, then counter-clockwise quarter turns.
struct Augmentation {
  bool flip_horizontal = false;
  bool flip_vertical = false;
  int quarter_turns = 0;
};

Augmentation draw_augmentation(std::uint64_t seed);
// Transforms a [C,S,S] tensor.
Tensor<float> apply_augmentation(const Tensor<float>& planes, const Augmentation& aug);
MaskSample apply_augmentation(const MaskSample& sample, const Augmentation& aug);
MaskSample augment(const MaskSample& sample, std::uint64_t seed);

template <typename Sample>
struct DataSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainOptions {
  int epochs = 20;
  int batch_size = 16;
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  bool augment = true;
  // Called after every epoch with its metrics and the current weights;
  // returning true ends training early.
  std::function<bool(const EpochMetrics&, const ParamSet<float>&)> on_epoch;
};

struct UNetTrainResult {
  UNet<float> model;
  std::vector<EpochMetrics> history;
  double test_accuracy = 0.0;
};

// Minimizes mean per-pixel binary cross-entropy. Accuracy is pixel accuracy
// at threshold 0.5.
UNetTrainResult train_unet(const DataSplit<MaskSample>& data, const UNetConfig& config,
                           const TrainOptions& options);
UNetTrainResult train_unet(const DataSplit<MaskSample>& data, UNet<float> model,
                           const TrainOptions& options);

struct SegEvaluation {
  double loss = 0.0;
  double pixel_accuracy = 0.0;
};

SegEvaluation evaluate_unet(const UNet<float>& model, const std::vector<MaskSample>& samples,
                            int batch_size = 32);

}  // namespace fw
