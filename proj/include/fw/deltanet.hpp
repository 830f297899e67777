#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fw/ops.hpp"
#include "fw/optim.hpp"
#include "fw/params.hpp"
#include "fw/segnet.hpp"

namespace fw {

struct VggBlock {
  int conv_count = 2;
  int out_channels = 64;
};

enum class LambdaScope { PerChannel, PerLevel };

// Before/after change classifier. Two instances of one frozen VGG-style
// feature stack see the before and after images; at every level a delta
// layer relu(after - lambda * before) feeds a third, trainable stack of the
// same shape; a three-layer dense head produces class logits.
struct DeltaNetConfig {
  int input_size = 224;
  int num_classes = 20;
  std::vector<VggBlock> blocks{{2, 64}, {2, 128}, {3, 256}, {3, 512}, {3, 512}};
  std::array<int, 3> dense_widths{256, 256, 20};
  LambdaScope lambda_scope = LambdaScope::PerChannel;
  double lambda_init = 1.0;

  // 224x224 input, VGG16 conv blocks, 25088 -> 256 -> 256 -> 20 head.
  static DeltaNetConfig paper_scale() { return {}; }
  // 64x64 input, blocks (1,1,2) x (8,16,32), 5 classes.
  static DeltaNetConfig toy() {
    DeltaNetConfig c;
    c.input_size = 64;
    c.num_classes = 5;
    c.blocks = {{1, 8}, {1, 16}, {2, 32}};
    c.dense_widths = {64, 64, 5};
    return c;
  }

  void validate() const;
  int final_resolution() const { return input_size >> blocks.size(); }
  int flattened_size() const;
};

// Parameter names:
//   frozen/block{b}/conv{i}/{weight,bias}  shared by the before and after paths
//   delta/block{b}/conv{i}/{weight,bias}   trainable third path
//   lambda/level{k}                        k = 0 (raw images) .. number of blocks
//   dense/fc{1,2,3}/{weight,bias}
template <typename T>
struct DeltaNetModel {
  DeltaNetConfig config;
  ParamSet<T> params;

  // Both frozen paths are views of the same stored weights.
  ParamSet<T> path_before() const { return params.subset("frozen/"); }
  ParamSet<T> path_after() const { return params.subset("frozen/"); }
  ParamSet<T> path_delta() const { return params.subset("delta/"); }
  ParamSet<T> lambdas() const { return params.subset("lambda/"); }
  ParamSet<T> dense() const { return params.subset("dense/"); }

  template <typename U>
  DeltaNetModel<U> cast() const {
    return {config, params.template cast<U>()};
  }
};

// Counts both frozen instances, as the architecture holds two feature paths.
template <typename T>
ParamCount param_count(const DeltaNetModel<T>& model) {
  ParamCount c = param_count(model.params);
  const ParamCount shared = param_count(model.path_before());
  c.frozen += shared.frozen;
  c.total += shared.frozen;
  return c;
}

// Parameter count of a configuration without allocating its weights.
ParamCount deltanet_param_count(const DeltaNetConfig& config);

// Frozen entries come from `frozen_weights` when given (names and shapes must
// match exactly, else FormatError naming the first offending tensor) or from
// seeded Kaiming init. Lambdas start at config.lambda_init.
DeltaNetModel<float> build_deltanet(const DeltaNetConfig& config,
                                    const std::optional<ParamSet<float>>& frozen_weights,
                                    std::uint64_t seed);

// Checks that `params` has exactly the entries `config` expects (names,
// shapes, trainable flags). Throws FormatError naming the first mismatch.
void check_deltanet_params(const DeltaNetConfig& config, const ParamSet<float>& params);

template <typename T>
Var<T> deltanet_logits(const DeltaNetConfig& config, ParamScope<T>& scope, const Var<T>& before,
                       const Var<T>& after);

// Logits [N,K] for batches of images [N,3,S,S].
template <typename T>
Tensor<T> deltanet_forward(const DeltaNetModel<T>& model, const Tensor<T>& before,
                           const Tensor<T>& after);

struct Classification {
  int label = 0;
  std::vector<double> probabilities;
};

// Argmax of softmax(logits); ties go to the lowest class index.
Classification classify_logits(std::span<const float> logits);
Classification classify(const DeltaNetModel<float>& model, const Tensor<float>& before,
                        const Tensor<float>& after);
std::vector<Classification> classify_batch(const DeltaNetModel<float>& model,
                                           const Tensor<float>& before,
                                           const Tensor<float>& after);

struct PairSample {
  Tensor<float> before;  // [3,S,S]
  Tensor<float> after;   // [3,S,S]
  int label = 0;
  int bin_id = 0;
  int seq = 0;
};

struct ClassifierEvaluation {
  double loss = 0.0;
  double accuracy = 0.0;
  std::vector<int> predictions;
};

ClassifierEvaluation evaluate_classifier(const DeltaNetModel<float>& model,
                                         const std::vector<PairSample>& samples,
                                         int batch_size = 32);

struct ClassifierTrainResult {
  DeltaNetModel<float> model;
  std::vector<EpochMetrics> history;
};

// Cross-entropy over trainable entries only; the frozen paths never change.
// The test split, if any, is ignored here.
ClassifierTrainResult train_classifier(const DataSplit<PairSample>& data,
                                       DeltaNetModel<float> model, const TrainOptions& options);

}  // namespace fw
