#pragma once

// Operation and parameter accounting.
//
// Conventions: a convolution or 1x1 map costs one MAC per multiply-add and
// flops = 2 * macs; its bias add is folded into the accumulate. Element-wise
// work (batch norm, activations, residual add, SE gate, pooling per input
// element, upsampling per output element) costs 1 FLOP per element and no
// MACs. Learnable parameters are conv weights, biases and batch-norm affine
// pairs; running statistics are excluded.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oareco/keyvalue.hpp"
#include "oareco/nn/arch.hpp"

namespace oareco {

struct Cost {
  std::uint64_t flops = 0;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;

  Cost& operator+=(const Cost& o) {
    flops += o.flops;
    macs += o.macs;
    params += o.params;
    return *this;
  }
  friend Cost operator+(Cost a, const Cost& b) { return a += b; }
  bool operator==(const Cost&) const = default;
};

struct CostEntry {
  std::string name;
  Cost cost;
};

struct CostReport {
  std::vector<CostEntry> per_layer;
  Cost totals;

  void add(std::string name, const Cost& c);
};

/// Sub-operation entries of one layer, names prefixed by `prefix`.
std::vector<CostEntry> layer_entries(const nn::LayerConfig& layer, int in_h, int in_w, const std::string& prefix = "");

/// Sum of layer_entries.
Cost layer_cost(const nn::LayerConfig& layer, int in_h, int in_w);

/// Spatial output size of a layer.
std::pair<int, int> layer_output_size(const nn::LayerConfig& layer, int in_h, int in_w);

CostReport network_cost(const nn::ArchConfig& arch, int input_h, int input_w);

/// Plain U-Net used as the large-model comparison point: `levels` resolution
/// levels (levels - 1 poolings), DoubleConv stages with channels doubling per
/// level, bilinear 2x upsampling, concat [upsampled, skip] and the same final
/// 3x3 conv and rectifier as the efficient network.
struct UNetConfig {
  std::string name = "deepmb-unet";
  int input_channels = 1;
  int levels = 4;
  int base_channels = 64;
  double width_multiplier = 1.0;

  void validate() const;
  int level_channels(int level) const;  // after width scaling
};

/// Comparison preset: width multiplier fitted so the parameter count lands
/// within 10% of 32.4e6.
UNetConfig deepmb_unet_preset();

std::vector<nn::ExpandedLayer> expand_unet(const UNetConfig& cfg, int input_h, int input_w);
CostReport unet_cost(const UNetConfig& cfg, int input_h, int input_w);

/// Delay-and-sum work for a grid of `num_pixels` and `num_detectors` traces:
/// per pair 8 FLOPs for the delay (two differences, two squares, a sum, a
/// square root, a scale and an offset) and a two-tap interpolation (2 MACs),
/// plus one normalizing division per pixel. Kept out of network totals.
CostReport das_cost(std::uint64_t num_pixels, std::uint64_t num_detectors);

struct FitPoint {
  double width_multiplier = 0.0;
  std::uint64_t params = 0;
};

/// Multipliers are searched on the lattice m / 32, m = 1..512.
struct FitResult {
  bool fitted = false;
  double width_multiplier = 0.0;  // valid when fitted
  std::uint64_t achieved_params = 0;
  std::optional<FitPoint> nearest_below;  // set when not fitted
  std::optional<FitPoint> nearest_above;
};

inline constexpr int kFitLatticeDenominator = 32;
inline constexpr int kFitLatticeMax = 512;

FitResult fit_width_multiplier(const nn::ArchConfig& arch_template, int input_h, int input_w,
                               std::uint64_t target_params, double tol_rel);
FitResult fit_width_multiplier(const UNetConfig& unet_template, int input_h, int input_w,
                               std::uint64_t target_params, double tol_rel);

/// Human-readable table and key=value rendering.
std::string format_cost_table(const CostReport& report, const std::string& title);
void put_cost(KeyValueMap& kv, const std::string& prefix, const CostReport& report, bool per_layer);

}  // namespace oareco
