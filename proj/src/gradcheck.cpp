#include "fw/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fw/rng.hpp"

namespace fw {
namespace {

double evaluate(const LossGraph& loss, const ParamSet<double>& params) {
  ParamScope<double> scope(params, false);
  return loss(scope).value()[0];
}

std::vector<std::size_t> sample_coords(std::size_t size, std::size_t limit, std::uint64_t seed) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (size <= limit) return idx;
  Rng rng(seed);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < limit; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradCheckReport grad_check(const LossGraph& loss, const ParamSet<double>& params,
                           const GradCheckOptions& options) {
  GradCheckReport report;

  GradMap<double> analytic;
  {
    ParamScope<double> scope(params, true);
    Var<double> out = loss(scope);
    backward(out);
    analytic = scope.gradients();
  }

  const double base = evaluate(loss, params);
  if (base != evaluate(loss, params)) {
    report.valid = false;
    return report;
  }

  ParamSet<double> probe = params;
  for (const auto& [name, p] : params) {
    if (!p.trainable) continue;
    const Tensor<double>& grad = analytic.at(name);
    Tensor<double>& value = probe.at(name).value;
    double worst = 0.0;
    for (std::size_t i : sample_coords(value.size(), options.max_coords_per_tensor,
                                       mix_seed({options.seed, hash_name(name)}))) {
      const double original = value[i];
      value[i] = original + options.epsilon;
      const double up = evaluate(loss, probe);
      value[i] = original - options.epsilon;
      const double down = evaluate(loss, probe);
      value[i] = original;

      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double denom = std::max({std::abs(grad[i]), std::abs(numeric), options.magnitude_floor});
      worst = std::max(worst, std::abs(grad[i] - numeric) / denom);
      ++report.coords_checked;
    }
    report.per_param[name] = worst;
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace fw
