#include "fw/segnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fw/rng.hpp"

namespace fw {
namespace {

std::string enc_name(int level, int conv) {
  return "enc" + std::to_string(level) + "/conv" + std::to_string(conv);
}
std::string dec_name(int level, int conv) {
  return "dec" + std::to_string(level) + "/conv" + std::to_string(conv);
}

template <typename T>
Var<T> conv_relu(ParamScope<T>& scope, const std::string& name, const Var<T>& x, int padding) {
  return relu(conv2d(x, scope[name + "/weight"], scope[name + "/bias"], padding));
}

Tensor<float> stack_field(const std::vector<const MaskSample*>& batch, bool masks) {
  std::vector<const Tensor<float>*> items;
  items.reserve(batch.size());
  for (const MaskSample* s : batch) items.push_back(masks ? &s->mask : &s->image);
  return stack<float>(items);
}

// Counts of pixels where (logit >= 0) agrees with the binary target.
std::size_t agreeing_pixels(const Tensor<float>& logits, const Tensor<float>& targets) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const bool predicted = logits[i] >= 0.0f;
    hits += predicted == (targets[i] > 0.5f) ? 1 : 0;
  }
  return hits;
}

void check_sample(const UNetConfig& config, const MaskSample& s) {
  const int size = config.input_size;
  if (!(s.image.shape() == Shape{3, size, size}) || !(s.mask.shape() == Shape{1, size, size})) {
    throw InvalidInput("mask sample shape " + s.image.shape().str() + "/" + s.mask.shape().str() +
                       " does not match U-Net input size " + std::to_string(size));
  }
}

}  // namespace

void UNetConfig::validate() const {
  if (depth < 1 || convs_per_block < 1 || base_channels < 1 || input_size < 1) {
    throw InvalidConfig("U-Net depth, widths and input size must be positive");
  }
  if (input_size % (1 << depth) != 0) {
    throw InvalidConfig("U-Net input size " + std::to_string(input_size) +
                        " is not divisible by 2^" + std::to_string(depth));
  }
}

UNet<float> build_unet(const UNetConfig& config, std::uint64_t seed) {
  config.validate();
  UNet<float> model{config, {}};
  auto width = [&](int level) { return config.base_channels << level; };
  int in = 3;
  for (int level = 0; level <= config.depth; ++level) {
    for (int c = 0; c < config.convs_per_block; ++c) {
      add_conv_params(model.params, enc_name(level, c), in, width(level), 3, true, seed);
      in = width(level);
    }
  }
  for (int level = config.depth - 1; level >= 0; --level) {
    in += width(level);  // skip connection
    for (int c = 0; c < config.convs_per_block; ++c) {
      add_conv_params(model.params, dec_name(level, c), in, width(level), 3, true, seed);
      in = width(level);
    }
  }
  add_conv_params(model.params, "head", in, 1, 1, true, seed);
  return model;
}

template <typename T>
Var<T> unet_logits(const UNetConfig& config, ParamScope<T>& scope, const Var<T>& images) {
  const Shape& s = images.shape();
  const int size = config.input_size;
  if (!(s.rank() == 4 && s[1] == 3 && s[2] == size && s[3] == size)) {
    throw InvalidInput("U-Net expects [N,3," + std::to_string(size) + "," +
                       std::to_string(size) + "] images, got " + s.str());
  }
  std::vector<Var<T>> skips;
  Var<T> x = images;
  for (int level = 0; level <= config.depth; ++level) {
    if (level > 0) x = maxpool2(x);
    for (int c = 0; c < config.convs_per_block; ++c) x = conv_relu(scope, enc_name(level, c), x, 1);
    if (level < config.depth) skips.push_back(x);
  }
  for (int level = config.depth - 1; level >= 0; --level) {
    x = concat_channels(skips[static_cast<std::size_t>(level)], upsample_bilinear2x(x));
    for (int c = 0; c < config.convs_per_block; ++c) x = conv_relu(scope, dec_name(level, c), x, 1);
  }
  return conv2d(x, scope["head/weight"], scope["head/bias"], 0);
}

template <typename T>
Tensor<T> unet_forward(const UNet<T>& model, const Tensor<T>& images) {
  ParamScope<T> scope(model.params, false);
  return sigmoid(unet_logits(model.config, scope, Var<T>::constant(images))).value();
}

Tensor<float> binarize(const Tensor<float>& probs, float threshold) {
  Tensor<float> out(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] >= threshold ? 1.0f : 0.0f;
  return out;
}

double pixel_accuracy(const Tensor<float>& predicted, const Tensor<float>& truth) {
  if (!(predicted.shape() == truth.shape())) {
    throw InvalidInput("pixel_accuracy shape mismatch: " + predicted.shape().str() + " vs " +
                       truth.shape().str());
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) same += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(truth.size());
}

Augmentation draw_augmentation(std::uint64_t seed) {
  Rng rng(mix_seed({seed, 0xa0a0}));
  Augmentation aug;
  aug.flip_horizontal = (rng() & 1) != 0;
  aug.flip_vertical = (rng() & 1) != 0;
  aug.quarter_turns = static_cast<int>(rng() % 4);
  return aug;
}

Tensor<float> apply_augmentation(const Tensor<float>& t, const Augmentation& aug) {
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  if (aug.quarter_turns % 2 == 1 && h != w) {
    throw InvalidInput("quarter turns need square samples");
  }
  Tensor<float> out(t.shape());
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h; ++i) {
      for (int j = 0; j < w; ++j) {
        // Output (i, j) pulls from the source through the inverse transform:
        // undo the rotation, then the flips.
        int r = i, q = j;
        for (int k = 0; k < aug.quarter_turns; ++k) {
          // Inverse of one counter-clockwise turn on a square of side h.
          const int nr = q, nq = h - 1 - r;
          r = nr;
          q = nq;
        }
        if (aug.flip_vertical) r = h - 1 - r;
        if (aug.flip_horizontal) q = w - 1 - q;
        out.at(ch, i, j) = t.at(ch, r, q);
      }
    }
  }
  return out;
}

MaskSample apply_augmentation(const MaskSample& sample, const Augmentation& aug) {
  return {apply_augmentation(sample.image, aug), apply_augmentation(sample.mask, aug)};
}

MaskSample augment(const MaskSample& sample, std::uint64_t seed) {
  return apply_augmentation(sample, draw_augmentation(seed));
}

SegEvaluation evaluate_unet(const UNet<float>& model, const std::vector<MaskSample>& samples,
                            int batch_size) {
  SegEvaluation eval;
  if (samples.empty()) return eval;
  double loss_sum = 0.0;
  std::size_t hits = 0, pixels = 0;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const MaskSample*> batch;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      check_sample(model.config, samples[i]);
      batch.push_back(&samples[i]);
    }
    ParamScope<float> scope(model.params, false);
    const Tensor<float> targets = stack_field(batch, true);
    auto logits = unet_logits(model.config, scope, Var<float>::constant(stack_field(batch, false)));
    const auto loss = binary_cross_entropy_with_logits(logits, targets);
    loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(targets.size());
    hits += agreeing_pixels(logits.value(), targets);
    pixels += targets.size();
  }
  eval.loss = loss_sum / static_cast<double>(pixels);
  eval.pixel_accuracy = static_cast<double>(hits) / static_cast<double>(pixels);
  return eval;
}

UNetTrainResult train_unet(const DataSplit<MaskSample>& data, const UNetConfig& config,
                           const TrainOptions& options) {
  return train_unet(data, build_unet(config, options.seed), options);
}

UNetTrainResult train_unet(const DataSplit<MaskSample>& data, UNet<float> model,
                           const TrainOptions& options) {
  if (data.train.empty() || data.val.empty() || data.test.empty()) {
    throw InvalidInput("U-Net training needs non-empty train, val and test splits");
  }
  if (options.batch_size < 1 || options.epochs < 0) {
    throw InvalidConfig("batch size must be >= 1 and epochs >= 0");
  }
  for (const auto* split : {&data.train, &data.val, &data.test}) {
    for (const auto& s : *split) check_sample(model.config, s);
  }

  UNetTrainResult result;
  Optimizer<float> optimizer(options.optimizer);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto order = shuffled_indices(data.train.size(), mix_seed({options.seed, 0x5e6, static_cast<std::uint64_t>(epoch)}));
    double loss_sum = 0.0;
    std::size_t hits = 0, pixels = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<MaskSample> augmented;
      augmented.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const MaskSample& s = data.train[order[i]];
        augmented.push_back(options.augment
                                ? augment(s, mix_seed({options.seed, static_cast<std::uint64_t>(epoch), order[i]}))
                                : s);
      }
      std::vector<const MaskSample*> batch;
      for (const auto& s : augmented) batch.push_back(&s);
      const Tensor<float> targets = stack_field(batch, true);

      ParamScope<float> scope(model.params, true);
      auto logits = unet_logits(model.config, scope, Var<float>::constant(stack_field(batch, false)));
      auto loss = binary_cross_entropy_with_logits(logits, targets);
      backward(loss);
      optimizer.step(model.params, scope.gradients());

      loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(targets.size());
      hits += agreeing_pixels(logits.value(), targets);
      pixels += targets.size();
    }
    const SegEvaluation val = evaluate_unet(model, data.val);
    result.history.push_back({epoch, loss_sum / static_cast<double>(pixels),
                              static_cast<double>(hits) / static_cast<double>(pixels), val.loss,
                              val.pixel_accuracy});
    if (options.on_epoch && options.on_epoch(result.history.back(), model.params)) break;
  }
  result.test_accuracy = evaluate_unet(model, data.test).pixel_accuracy;
  result.model = std::move(model);
  return result;
}

template Var<float> unet_logits(const UNetConfig&, ParamScope<float>&, const Var<float>&);
template Var<double> unet_logits(const UNetConfig&, ParamScope<double>&, const Var<double>&);
template Tensor<float> unet_forward(const UNet<float>&, const Tensor<float>&);
template Tensor<double> unet_forward(const UNet<double>&, const Tensor<double>&);

}  // namespace fw
