#pragma once

// Inference kernels. Every kernel computes each output element in a fixed
// order that does not depend on how work is split across threads.

#include <cmath>
#include <span>

#include "oareco/nn/tensor.hpp"

namespace oareco::nn {

enum class Activation { none, relu, silu };

inline float sigmoid(float z) { return 1.0f / (1.0f + std::exp(-z)); }
inline float silu(float z) { return z * sigmoid(z); }

/// 2D cross-correlation with "same" padding (k / 2) on a (C, H, W) input.
/// Output is (Cout, ceil(H / stride), ceil(W / stride)). `bias` may be empty.
/// Uses im2col + blocked GEMM for dense groups, a direct loop for depthwise.
Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias, int stride, int groups);

struct BatchNormView {
  std::span<const float> gamma;
  std::span<const float> beta;
  std::span<const float> mean;
  std::span<const float> var;
  float eps = 1e-3f;
};

/// In place: x <- act(gamma * (x - mean) / sqrt(var + eps) + beta), per channel.
void batch_norm(Tensor& x, const BatchNormView& bn, Activation act);

/// Inference batch norm followed by SiLU.
Tensor bn_silu(const Tensor& input, std::span<const float> gamma, std::span<const float> beta,
               std::span<const float> mean, std::span<const float> var, float eps);

/// Squeeze-and-excitation: y_c = x_c * sigmoid(expand(silu(reduce(gap(x)))))_c.
/// `w_reduce` is (R, C, 1, 1) and `w_expand` is (C, R, 1, 1).
Tensor se_block(const Tensor& input, const Tensor& w_reduce, std::span<const float> b_reduce,
                const Tensor& w_expand, std::span<const float> b_expand);

/// 2x bilinear upsampling with half-pixel centres (edge samples clamped).
Tensor upsample_bilinear2x(const Tensor& input);

/// Channel-wise concatenation; `first` channels come first.
Tensor concat_channels(const Tensor& first, const Tensor& second);

void relu_inplace(Tensor& x);

/// x += other, element-wise; shapes must match.
void add_inplace(Tensor& x, const Tensor& other);

}  // namespace oareco::nn
