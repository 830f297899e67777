#include "fw/params.hpp"

#include <cmath>

#include "fw/rng.hpp"

namespace fw {

Tensor<float> kaiming_uniform(Shape shape, int fan_in, std::uint64_t seed) {
  Tensor<float> t(shape);
  Rng rng(seed);
  const double bound = std::sqrt(6.0 / fan_in);
  for (float& v : t.values()) v = static_cast<float>(uniform(rng, -bound, bound));
  return t;
}

void add_conv_params(ParamSet<float>& params, const std::string& prefix, int in_channels,
                     int out_channels, int kernel, bool trainable, std::uint64_t seed) {
  const int fan_in = in_channels * kernel * kernel;
  params.add(prefix + "/weight",
             kaiming_uniform(Shape{out_channels, in_channels, kernel, kernel}, fan_in,
                             mix_seed({seed, hash_name(prefix)})),
             trainable);
  params.add(prefix + "/bias", Tensor<float>(Shape{out_channels}), trainable);
}

void add_dense_params(ParamSet<float>& params, const std::string& prefix, int in_features,
                      int out_features, bool trainable, std::uint64_t seed) {
  params.add(prefix + "/weight",
             kaiming_uniform(Shape{in_features, out_features}, in_features,
                             mix_seed({seed, hash_name(prefix)})),
             trainable);
  params.add(prefix + "/bias", Tensor<float>(Shape{out_features}), trainable);
}

}  // namespace fw
