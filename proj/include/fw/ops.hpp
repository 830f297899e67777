#pragma once

#include <span>

#include "fw/autograd.hpp"

namespace fw {

// Cross-correlation (no kernel flip). x: [N,Cin,H,W], kernel: [Cout,Cin,kH,kW]
// with odd kH/kW, bias: [Cout]. Output [N,Cout,H',W'] with
// H' = (H + 2*padding - kH) / stride + 1.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, int padding,
              int stride = 1);

// 2x2 max-pool with stride 2. Ties route the gradient to the first maximum in
// row-major window order.
template <typename T>
Var<T> maxpool2(const Var<T>& x);

template <typename T>
Var<T> relu(const Var<T>& x);

// x: [N,D], weight: [D,M], bias: [M] -> x*weight + bias.
template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

// Mean over the batch of -log softmax(logits)[label]. Returns a [1] tensor.
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels);

template <typename T>
Var<T> sigmoid(const Var<T>& x);

// Mean per-element binary cross-entropy of sigmoid(logits) against targets in
// {0,1}, evaluated in the overflow-free logits form.
template <typename T>
Var<T> binary_cross_entropy_with_logits(const Var<T>& logits, const Tensor<T>& targets);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);

// [N,Ca,H,W] ++ [N,Cb,H,W] -> [N,Ca+Cb,H,W]
template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b);

// Doubles H and W with corner-aligned bilinear interpolation. No weights.
template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x);

// [N,...] -> [N, prod(...)]
template <typename T>
Var<T> flatten(const Var<T>& x);

// relu(after - lambda[c] * before). lambda has C entries, or a single entry
// shared by every channel.
template <typename T>
Var<T> delta_layer(const Var<T>& after, const Var<T>& before, const Var<T>& lambda);

// Sum of all elements, as a [1] tensor.
template <typename T>
Var<T> sum(const Var<T>& x);

// Row-wise softmax of [N,K] logits; not differentiable.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits);

}  // namespace fw
