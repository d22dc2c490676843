#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "oareco/domain.hpp"
#include "oareco/nn/arch.hpp"
#include "oareco/nn/ops.hpp"
#include "oareco/nn/weights.hpp"

namespace oareco::nn {

/// Convolution (with bias) optionally followed by inference batch norm and an activation.
struct ConvUnit {
  Tensor weight;
  std::vector<float> bias;
  bool has_bn = false;
  std::vector<float> gamma, beta, mean, var;
  float eps = 1e-3f;
  int stride = 1;
  int groups = 1;
  Activation act = Activation::none;

  Tensor operator()(const Tensor& x) const;
};

struct SqueezeExcite {
  Tensor w_reduce;
  std::vector<float> b_reduce;
  Tensor w_expand;
  std::vector<float> b_expand;

  Tensor operator()(const Tensor& x) const { return se_block(x, w_reduce, b_reduce, w_expand, b_expand); }
};

/// Inverted residual block. `expand` is absent for MBConv1.
struct MBConvBlock {
  std::unique_ptr<ConvUnit> expand;
  ConvUnit depthwise;
  SqueezeExcite se;
  ConvUnit project;
  bool residual = false;

  Tensor operator()(const Tensor& x) const;
};

/// Binds an MBConv layer config to weights stored under `prefix`.
MBConvBlock make_mbconv(const LayerConfig& cfg, const ModelWeights& weights, const std::string& prefix,
                        float bn_eps = 1e-3f);

/// mbconv(input, cfg, weights): runs one inverted residual block whose
/// weights live under `prefix` in `weights`.
Tensor mbconv(const Tensor& input, const LayerConfig& cfg, const ModelWeights& weights, const std::string& prefix,
              float bn_eps = 1e-3f);

struct TapShape {
  int encoder_index = 0;
  std::size_t channels = 0, height = 0, width = 0;
};

/// Immutable executable network. Concurrent forward() calls are safe; each
/// call allocates its own activations.
class Model {
 public:
  /// build_network: validates the weights against the architecture manifest.
  static Model build(const ArchConfig& arch, const ModelWeights& weights);

  const ArchConfig& arch() const noexcept { return arch_; }  // scaled
  std::size_t parameter_count() const noexcept { return parameter_count_; }
  const std::vector<TapShape>& tap_shapes() const noexcept { return taps_; }

  /// (C_in, H, W) -> (1, H, W), rectified.
  Tensor forward(const Tensor& input) const;

  /// Runs the network on a delay-and-sum image; the output keeps its grid.
  Image infer(const Image& das_image) const;

 private:
  struct EncoderBlock {
    std::unique_ptr<ConvUnit> conv;  // Conv kind
    std::unique_ptr<MBConvBlock> mb;
  };
  struct DecoderBlock {
    ConvUnit conv1;
    ConvUnit conv2;
  };

  ArchConfig arch_;
  std::size_t parameter_count_ = 0;
  std::vector<TapShape> taps_;
  std::vector<std::shared_ptr<const EncoderBlock>> encoder_;
  std::vector<std::shared_ptr<const DecoderBlock>> decoder_;
  std::shared_ptr<const ConvUnit> final_;
};

}  // namespace oareco::nn
