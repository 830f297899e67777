#pragma once

#include <cstdint>
#include <string>

#include "fw/params.hpp"

namespace fw {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimizerKind parse_optimizer_kind(const std::string& name);

// Updates trainable entries only. Adam keeps per-entry moments across steps.
template <typename T>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  // Throws InvalidInput if a trainable entry has no gradient; frozen entries
  // are skipped whatever their gradient holds.
  void step(ParamSet<T>& params, const GradMap<T>& grads);

  const OptimizerConfig& config() const { return config_; }
  std::int64_t steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  std::int64_t steps_ = 0;
  GradMap<T> first_moment_;
  GradMap<T> second_moment_;
};

// Single stateless-looking step; `state` carries Adam moments between calls.
template <typename T>
void optimizer_step(ParamSet<T>& params, const GradMap<T>& grads, Optimizer<T>& state) {
  state.step(params, grads);
}

}  // namespace fw
