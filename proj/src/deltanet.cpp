#include "fw/deltanet.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include "fw/rng.hpp"
#include "fw/weights_io.hpp"

namespace fw {
namespace {

std::string conv_name(const char* path, int block, int conv) {
  return std::string(path) + "/block" + std::to_string(block) + "/conv" + std::to_string(conv);
}

std::string lambda_name(int level) { return "lambda/level" + std::to_string(level); }

int lambda_width(const DeltaNetConfig& config, int level) {
  if (config.lambda_scope == LambdaScope::PerLevel) return 1;
  return level == 0 ? 3 : config.blocks[static_cast<std::size_t>(level - 1)].out_channels;
}

// Adds one VGG-style stack under `path`.
void add_stack(ParamSet<float>& params, const DeltaNetConfig& config, const char* path,
               bool trainable, std::uint64_t seed) {
  int in = 3;
  for (std::size_t b = 0; b < config.blocks.size(); ++b) {
    for (int c = 0; c < config.blocks[b].conv_count; ++c) {
      add_conv_params(params, conv_name(path, static_cast<int>(b) + 1, c + 1), in,
                      config.blocks[b].out_channels, 3, trainable, seed);
      in = config.blocks[b].out_channels;
    }
  }
}

// Convs (3x3, padding 1) + relu, then 2x2 max-pool.
template <typename T>
Var<T> vgg_block(ParamScope<T>& scope, const DeltaNetConfig& config, const char* path, int block,
                 Var<T> x) {
  for (int c = 0; c < config.blocks[static_cast<std::size_t>(block - 1)].conv_count; ++c) {
    const std::string name = conv_name(path, block, c + 1);
    x = relu(conv2d(x, scope[name + "/weight"], scope[name + "/bias"], 1));
  }
  return maxpool2(x);
}

Tensor<float> stack_images(const std::vector<const PairSample*>& batch, bool after) {
  std::vector<const Tensor<float>*> items;
  items.reserve(batch.size());
  for (const PairSample* s : batch) items.push_back(after ? &s->after : &s->before);
  return stack<float>(items);
}

void check_pair(const DeltaNetConfig& config, const PairSample& s) {
  const Shape want{3, config.input_size, config.input_size};
  if (!(s.before.shape() == want) || !(s.after.shape() == want)) {
    throw InvalidInput("pair sample shape " + s.before.shape().str() + "/" + s.after.shape().str() +
                       " does not match classifier input " + want.str());
  }
  if (s.label < 0 || s.label >= config.num_classes) {
    throw InvalidInput("label " + std::to_string(s.label) + " outside [0, " +
                       std::to_string(config.num_classes) + ")");
  }
}

}  // namespace

void DeltaNetConfig::validate() const {
  if (blocks.empty()) throw InvalidConfig("delta network needs at least one block");
  for (const auto& b : blocks) {
    if (b.conv_count < 1 || b.out_channels < 1) throw InvalidConfig("block sizes must be positive");
  }
  if (input_size < 1 || input_size % (1 << blocks.size()) != 0) {
    throw InvalidConfig("input size " + std::to_string(input_size) + " is not divisible by 2^" +
                        std::to_string(blocks.size()));
  }
  if (num_classes < 2) throw InvalidConfig("num_classes must be >= 2");
  if (dense_widths[2] != num_classes) {
    throw InvalidConfig("last dense width must equal num_classes");
  }
  if (dense_widths[0] < 1 || dense_widths[1] < 1) throw InvalidConfig("dense widths must be positive");
}

int DeltaNetConfig::flattened_size() const {
  const int r = final_resolution();
  return r * r * blocks.back().out_channels;
}

ParamCount deltanet_param_count(const DeltaNetConfig& config) {
  config.validate();
  std::int64_t stack = 0;
  std::int64_t in = 3;
  for (const auto& b : config.blocks) {
    for (int c = 0; c < b.conv_count; ++c) {
      stack += in * b.out_channels * 9 + b.out_channels;
      in = b.out_channels;
    }
  }
  std::int64_t lambdas = 0;
  for (int level = 0; level <= static_cast<int>(config.blocks.size()); ++level) {
    lambdas += lambda_width(config, level);
  }
  std::int64_t dense = 0;
  std::int64_t width = config.flattened_size();
  for (int w : config.dense_widths) {
    dense += width * w + w;
    width = w;
  }
  ParamCount c;
  c.frozen = 2 * stack;
  c.trainable = stack + lambdas + dense;
  c.total = c.frozen + c.trainable;
  return c;
}

void check_deltanet_params(const DeltaNetConfig& config, const ParamSet<float>& params) {
  check_layout(params, build_deltanet(config, std::nullopt, 0).params);
}

DeltaNetModel<float> build_deltanet(const DeltaNetConfig& config,
                                    const std::optional<ParamSet<float>>& frozen_weights,
                                    std::uint64_t seed) {
  config.validate();
  DeltaNetModel<float> model{config, {}};
  if (frozen_weights) {
    ParamSet<float> layout;
    add_stack(layout, config, "frozen", false, 0);
    // The file's trainable flags are ignored: these entries are frozen here.
    ParamSet<float> given;
    for (const auto& [name, p] : *frozen_weights) given.add(name, p.value, false);
    check_layout(given, layout);
    for (const auto& [name, p] : given) model.params.add(name, p.value, false);
  } else {
    add_stack(model.params, config, "frozen", false, seed);
  }
  add_stack(model.params, config, "delta", true, seed);
  for (int level = 0; level <= static_cast<int>(config.blocks.size()); ++level) {
    model.params.add(lambda_name(level),
                     Tensor<float>(Shape{lambda_width(config, level)},
                                   static_cast<float>(config.lambda_init)),
                     true);
  }
  int in = config.flattened_size();
  for (int i = 0; i < 3; ++i) {
    add_dense_params(model.params, "dense/fc" + std::to_string(i + 1), in, config.dense_widths[i],
                     true, seed);
    in = config.dense_widths[i];
  }
  return model;
}

template <typename T>
Var<T> deltanet_logits(const DeltaNetConfig& config, ParamScope<T>& scope, const Var<T>& before,
                       const Var<T>& after) {
  const int size = config.input_size;
  for (const Var<T>* img : {&before, &after}) {
    const Shape& s = img->shape();
    if (!(s.rank() == 4 && s[1] == 3 && s[2] == size && s[3] == size)) {
      throw InvalidInput("delta network expects [N,3," + std::to_string(size) + "," +
                         std::to_string(size) + "] images, got " + s.str());
    }
  }
  if (before.shape()[0] != after.shape()[0]) throw InvalidInput("before/after batch sizes differ");

  const int levels = static_cast<int>(config.blocks.size());
  Var<T> x = delta_layer(after, before, scope[lambda_name(0)]);
  Var<T> feat_before = before, feat_after = after;
  for (int block = 1; block <= levels; ++block) {
    feat_before = vgg_block(scope, config, "frozen", block, feat_before);
    feat_after = vgg_block(scope, config, "frozen", block, feat_after);
    x = vgg_block(scope, config, "delta", block, x);
    x = add(x, delta_layer(feat_after, feat_before, scope[lambda_name(block)]));
  }
  Var<T> h = flatten(x);
  h = relu(dense(h, scope["dense/fc1/weight"], scope["dense/fc1/bias"]));
  h = relu(dense(h, scope["dense/fc2/weight"], scope["dense/fc2/bias"]));
  return dense(h, scope["dense/fc3/weight"], scope["dense/fc3/bias"]);
}

template <typename T>
Tensor<T> deltanet_forward(const DeltaNetModel<T>& model, const Tensor<T>& before,
                           const Tensor<T>& after) {
  ParamScope<T> scope(model.params, false);
  return deltanet_logits(model.config, scope, Var<T>::constant(before), Var<T>::constant(after))
      .value();
}

Classification classify_logits(std::span<const float> logits) {
  if (logits.empty()) throw InvalidInput("classify needs at least one logit");
  Classification out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  out.probabilities.resize(logits.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.probabilities[k] = std::exp(static_cast<double>(logits[k]) - mx);
    total += out.probabilities[k];
  }
  for (double& p : out.probabilities) p /= total;
  // First maximal logit: lowest index wins ties.
  out.label = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  return out;
}

std::vector<Classification> classify_batch(const DeltaNetModel<float>& model,
                                           const Tensor<float>& before,
                                           const Tensor<float>& after) {
  const Tensor<float> logits = deltanet_forward(model, before, after);
  const int n = logits.dim(0), k = logits.dim(1);
  std::vector<Classification> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(classify_logits(std::span<const float>(logits.data() + static_cast<std::size_t>(i) * k,
                                                         static_cast<std::size_t>(k))));
  }
  return out;
}

Classification classify(const DeltaNetModel<float>& model, const Tensor<float>& before,
                        const Tensor<float>& after) {
  auto batched = [](const Tensor<float>& t) {
    if (t.rank() == 3) return t.reshape(Shape{1, t.dim(0), t.dim(1), t.dim(2)});
    return t;
  };
  auto results = classify_batch(model, batched(before), batched(after));
  if (results.size() != 1) throw InvalidInput("classify expects a single image pair");
  return results.front();
}

ClassifierEvaluation evaluate_classifier(const DeltaNetModel<float>& model,
                                         const std::vector<PairSample>& samples, int batch_size) {
  ClassifierEvaluation eval;
  if (samples.empty()) return eval;
  double loss_sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    std::vector<const PairSample*> batch;
    std::vector<int> labels;
    for (std::size_t i = start; i < std::min(samples.size(), start + batch_size); ++i) {
      check_pair(model.config, samples[i]);
      batch.push_back(&samples[i]);
      labels.push_back(samples[i].label);
    }
    ParamScope<float> scope(model.params, false);
    auto logits = deltanet_logits(model.config, scope, Var<float>::constant(stack_images(batch, false)),
                                  Var<float>::constant(stack_images(batch, true)));
    loss_sum += static_cast<double>(softmax_cross_entropy(logits, labels).value()[0]) *
                static_cast<double>(batch.size());
    const int k = logits.shape()[1];
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const int pred = classify_logits(std::span<const float>(logits.value().data() + i * k,
                                                              static_cast<std::size_t>(k)))
                           .label;
      eval.predictions.push_back(pred);
      hits += pred == labels[i] ? 1 : 0;
    }
  }
  eval.loss = loss_sum / static_cast<double>(samples.size());
  eval.accuracy = static_cast<double>(hits) / static_cast<double>(samples.size());
  return eval;
}

ClassifierTrainResult train_classifier(const DataSplit<PairSample>& data,
                                       DeltaNetModel<float> model, const TrainOptions& options) {
  if (data.train.empty() || data.val.empty()) {
    throw InvalidInput("classifier training needs non-empty train and val splits");
  }
  if (options.batch_size < 1 || options.epochs < 0) {
    throw InvalidConfig("batch size must be >= 1 and epochs >= 0");
  }
  for (const auto* split : {&data.train, &data.val}) {
    for (const auto& s : *split) check_pair(model.config, s);
  }

  ClassifierTrainResult result;
  Optimizer<float> optimizer(options.optimizer);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto order = shuffled_indices(
        data.train.size(), mix_seed({options.seed, 0xc1a55, static_cast<std::uint64_t>(epoch)}));
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<PairSample> prepared;
      prepared.reserve(end - start);
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        const PairSample& s = data.train[order[i]];
        if (options.augment) {
          // One geometry for both images keeps them in correspondence.
          const Augmentation aug = draw_augmentation(
              mix_seed({options.seed, static_cast<std::uint64_t>(epoch), order[i]}));
          prepared.push_back({apply_augmentation(s.before, aug), apply_augmentation(s.after, aug),
                              s.label, s.bin_id, s.seq});
        } else {
          prepared.push_back(s);
        }
        labels.push_back(s.label);
      }
      std::vector<const PairSample*> batch;
      for (const auto& s : prepared) batch.push_back(&s);

      ParamScope<float> scope(model.params, true);
      auto logits = deltanet_logits(model.config, scope, Var<float>::constant(stack_images(batch, false)),
                                    Var<float>::constant(stack_images(batch, true)));
      auto loss = softmax_cross_entropy(logits, labels);
      backward(loss);
      optimizer.step(model.params, scope.gradients());

      loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(batch.size());
      const int k = logits.shape()[1];
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const int pred = classify_logits(std::span<const float>(logits.value().data() + i * k,
                                                                static_cast<std::size_t>(k)))
                             .label;
        hits += pred == labels[i] ? 1 : 0;
      }
    }
    const ClassifierEvaluation val = evaluate_classifier(model, data.val);
    const double n = static_cast<double>(data.train.size());
    result.history.push_back({epoch, loss_sum / n, static_cast<double>(hits) / n, val.loss,
                              val.accuracy});
    if (options.on_epoch && options.on_epoch(result.history.back(), model.params)) break;
  }
  result.model = std::move(model);
  return result;
}

template Var<float> deltanet_logits(const DeltaNetConfig&, ParamScope<float>&, const Var<float>&,
                                    const Var<float>&);
template Var<double> deltanet_logits(const DeltaNetConfig&, ParamScope<double>&, const Var<double>&,
                                     const Var<double>&);
template Tensor<float> deltanet_forward(const DeltaNetModel<float>&, const Tensor<float>&,
                                        const Tensor<float>&);
template Tensor<double> deltanet_forward(const DeltaNetModel<double>&, const Tensor<double>&,
                                         const Tensor<double>&);

}  // namespace fw
