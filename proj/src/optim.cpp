#include "fw/optim.hpp"

#include <cmath>

namespace fw {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw InvalidConfig("unknown optimizer '" + name + "' (expected sgd or adam)");
}

template <typename T>
void Optimizer<T>::step(ParamSet<T>& params, const GradMap<T>& grads) {
  for (const auto& [name, p] : params) {
    if (!p.trainable) continue;
    auto it = grads.find(name);
    if (it == grads.end()) throw InvalidInput("missing gradient for trainable parameter " + name);
    if (!(it->second.shape() == p.value.shape())) {
      throw InvalidInput("gradient shape mismatch for " + name);
    }
  }
  ++steps_;
  const T lr = static_cast<T>(config_.lr);
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    const Tensor<T>& g = grads.find(name)->second;
    if (config_.kind == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < g.size(); ++i) p.value[i] -= lr * g[i];
      continue;
    }
    auto& m = first_moment_.try_emplace(name, p.value.shape()).first->second;
    auto& v = second_moment_.try_emplace(name, p.value.shape()).first->second;
    const T b1 = static_cast<T>(config_.beta1);
    const T b2 = static_cast<T>(config_.beta2);
    const T c1 = T(1) - static_cast<T>(std::pow(config_.beta1, static_cast<double>(steps_)));
    const T c2 = T(1) - static_cast<T>(std::pow(config_.beta2, static_cast<double>(steps_)));
    const T eps = static_cast<T>(config_.eps);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T mhat = m[i] / c1;
      const T vhat = v[i] / c2;
      p.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace fw
