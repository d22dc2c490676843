#pragma once

// Declarative description of the encoder-decoder reconstruction network.
//
// Encoder: seven blocks (Conv, MBConv1, MBConv6). Selected encoder outputs are
// tapped as skips. Decoder: per skip, deepest first, a 2x bilinear upsample,
// channel concatenation [upsampled, skip] and a DoubleConv. A final 3x3 conv
// maps to one channel followed by a rectifier.

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "oareco/keyvalue.hpp"

namespace oareco::nn {

/// MaxPool appears only in the U-Net comparison preset of the cost model.
enum class BlockKind { Conv, MBConv1, MBConv6, DoubleConv, Upsample, Concat, FinalConv, MaxPool };

const char* to_string(BlockKind kind);
BlockKind block_kind_from_string(const std::string& text);

struct LayerConfig {
  BlockKind kind = BlockKind::Conv;
  int in_ch = 1;
  int out_ch = 1;
  int stride = 1;
  int kernel = 3;
  int expansion = 1;     // 6 for MBConv6
  int se_reduction = 4;

  int expanded_channels() const { return in_ch * expansion; }
  int se_channels() const { return std::max(expanded_channels() / se_reduction, 1); }
  bool residual() const { return (kind == BlockKind::MBConv1 || kind == BlockKind::MBConv6) && stride == 1 && in_ch == out_ch; }

  void validate() const;
};

/// Factory that fills in the fixed kernel / expansion / SE settings of a kind.
LayerConfig make_layer(BlockKind kind, int in_ch, int out_ch, int stride = 1);

enum class InputNormalization { none, max_abs };

struct ArchConfig {
  static constexpr int kEncoderBlocks = 7;

  std::string name = "efficientdeepmb";
  int input_channels = 1;
  int input_size = 64;                   // expected square input side in pixels
  std::vector<LayerConfig> encoder;      // unscaled channel counts; in_ch is chained
  std::vector<int> skip_taps;            // encoder indices (0-based), ascending
  std::vector<int> decoder_channels;     // DoubleConv outputs, deepest stage first
  double width_multiplier = 1.0;
  double bn_eps = 1e-3;
  InputNormalization input_normalization = InputNormalization::none;

  /// Copy with the width multiplier applied to every channel count and in_ch
  /// chained through the encoder; its width_multiplier is 1.
  ArchConfig scaled() const;

  /// Checks block count, stride/channel chaining, skip resolutions and the
  /// divisibility of input_size. Throws InvalidInput.
  void validate() const;

  int downsample_factor() const;
};

/// Nearest multiple of 8 (halves round up), at least 8.
int scale_channels(int base, double multiplier);

/// B0-derived template: Conv(1->32), MBConv1(32->16), MBConv6 24/s2, 40/s2,
/// 80/s2, 112/s1, 192/s2; skips after blocks 1, 2, 3, 5; decoder 112, 40, 24, 16.
ArchConfig default_arch(int input_size = 64);

/// Every block expanded in execution order with resolved channels, including
/// decoder Upsample / Concat / DoubleConv triples and the final conv.
struct ExpandedLayer {
  std::string name;
  LayerConfig layer;
  int in_h = 0;
  int in_w = 0;
};
std::vector<ExpandedLayer> expand_layers(const ArchConfig& arch, int input_h, int input_w);

/// Weight tensor expected by the engine.
struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  bool learnable = true;  // false for batch-norm running statistics
};

/// Canonical weight manifest in file order.
std::vector<TensorSpec> expected_manifest(const ArchConfig& arch);

/// Sum of learnable tensor sizes in the manifest.
std::size_t manifest_parameter_count(const ArchConfig& arch);

ArchConfig arch_from_sidecar(const KeyValueMap& kv);
KeyValueMap arch_to_sidecar(const ArchConfig& arch);

}  // namespace oareco::nn
