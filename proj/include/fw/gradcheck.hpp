#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "fw/params.hpp"

namespace fw {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Coordinates sampled per tensor (all of them when the tensor is smaller).
  std::size_t max_coords_per_tensor = 32;
  std::uint64_t seed = 0;
  // Denominator floor so vanishing gradients are judged on absolute error.
  double magnitude_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::map<std::string, double> per_param;
  std::size_t coords_checked = 0;
  // False when two evaluations at the same point disagreed.
  bool valid = true;
  bool passed = false;
};

// Builds the scalar loss graph from bound parameters.
using LossGraph = std::function<Var<double>(ParamScope<double>&)>;

// Compares reverse-mode gradients with central differences
// (f(p+e) - f(p-e)) / 2e on sampled coordinates of every trainable entry.
// Relative error is |a - n| / max(|a|, |n|, magnitude_floor).
GradCheckReport grad_check(const LossGraph& loss, const ParamSet<double>& params,
                           const GradCheckOptions& options = {});

}  // namespace fw
