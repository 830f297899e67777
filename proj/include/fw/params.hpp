#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>

#include "fw/autograd.hpp"
#include "fw/tensor.hpp"

namespace fw {

template <typename T>
struct Param {
  Tensor<T> value;
  bool trainable = true;
};

template <typename T>
using GradMap = std::map<std::string, Tensor<T>, std::less<>>;

// Named parameter tensors with a trainable flag each. Names are path-like
// ("block1/conv2/weight") and iterate in lexicographic order.
template <typename T>
class ParamSet {
 public:
  using Entries = std::map<std::string, Param<T>, std::less<>>;

  void add(std::string name, Tensor<T> value, bool trainable) {
    if (name.empty()) throw InvalidInput("parameter names must be non-empty");
    auto [it, inserted] = entries_.try_emplace(std::move(name), Param<T>{std::move(value), trainable});
    if (!inserted) throw InvalidInput("duplicate parameter name: " + it->first);
  }

  bool contains(std::string_view name) const { return entries_.find(name) != entries_.end(); }

  const Param<T>& at(std::string_view name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidInput("unknown parameter: " + std::string(name));
    return it->second;
  }
  Param<T>& at(std::string_view name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) throw InvalidInput("unknown parameter: " + std::string(name));
    return it->second;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

  // Entries whose names start with `prefix`, names unchanged.
  ParamSet subset(std::string_view prefix) const {
    ParamSet out;
    for (const auto& [name, p] : entries_) {
      if (std::string_view(name).starts_with(prefix)) out.add(name, p.value, p.trainable);
    }
    return out;
  }

  template <typename U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (const auto& [name, p] : entries_) out.add(name, p.value.template cast<U>(), p.trainable);
    return out;
  }

  bool operator==(const ParamSet& other) const {
    if (entries_.size() != other.entries_.size()) return false;
    auto it = other.entries_.begin();
    for (const auto& [name, p] : entries_) {
      if (name != it->first || p.trainable != it->second.trainable || !(p.value == it->second.value))
        return false;
      ++it;
    }
    return true;
  }

 private:
  Entries entries_;
};

struct ParamCount {
  std::int64_t total = 0;
  std::int64_t trainable = 0;
  std::int64_t frozen = 0;
};

template <typename T>
ParamCount param_count(const ParamSet<T>& params) {
  ParamCount c;
  for (const auto& [name, p] : params) {
    const auto n = static_cast<std::int64_t>(p.value.size());
    (p.trainable ? c.trainable : c.frozen) += n;
  }
  c.total = c.trainable + c.frozen;
  return c;
}

// Binds a ParamSet to graph leaves for one forward pass. Each parameter gets a
// single leaf no matter how often it is referenced, so shared weights
// accumulate one gradient. Frozen entries never require gradients.
template <typename T>
class ParamScope {
 public:
  ParamScope(const ParamSet<T>& params, bool track_gradients)
      : params_(&params), track_(track_gradients) {}

  Var<T> operator[](std::string_view name) {
    auto it = leaves_.find(std::string(name));
    if (it != leaves_.end()) return it->second;
    const Param<T>& p = params_->at(name);
    Var<T> leaf = Var<T>::leaf(p.value, track_ && p.trainable);
    leaves_.emplace(std::string(name), leaf);
    return leaf;
  }

  // Gradient for every entry of the bound set; zeros where nothing flowed
  // (frozen or unused parameters).
  GradMap<T> gradients() const {
    GradMap<T> out;
    for (const auto& [name, p] : *params_) {
      auto it = leaves_.find(name);
      if (it != leaves_.end() && !it->second.grad().empty()) {
        out.emplace(name, it->second.grad());
      } else {
        out.emplace(name, Tensor<T>(p.value.shape()));
      }
    }
    return out;
  }

  const ParamSet<T>& params() const { return *params_; }

 private:
  const ParamSet<T>* params_;
  bool track_;
  std::unordered_map<std::string, Var<T>> leaves_;
};

// Kaiming-uniform weights (bound sqrt(6 / fan_in)) and zero bias, seeded from
// (seed, prefix) so a layer's init does not depend on construction order.
void add_conv_params(ParamSet<float>& params, const std::string& prefix, int in_channels,
                     int out_channels, int kernel, bool trainable, std::uint64_t seed);
void add_dense_params(ParamSet<float>& params, const std::string& prefix, int in_features,
                      int out_features, bool trainable, std::uint64_t seed);
Tensor<float> kaiming_uniform(Shape shape, int fan_in, std::uint64_t seed);

}  // namespace fw
