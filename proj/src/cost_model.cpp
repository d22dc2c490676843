#include "oareco/cost_model.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "oareco/error.hpp"

namespace oareco {

using nn::BlockKind;
using nn::LayerConfig;

namespace {

using u64 = std::uint64_t;

u64 u(int v) { return static_cast<u64>(v); }

int conv_out(int in, int stride) { return (in + stride - 1) / stride; }

struct Emitter {
  std::vector<CostEntry>& out;
  const std::string& prefix;

  void emit(const std::string& name, Cost c) { out.push_back({prefix + name, c}); }

  // Convolution with bias; optional batch norm and activation entries.
  void conv(const std::string& name, int cin, int cout, int k, int groups, int ho, int wo, bool bn, bool act) {
    const u64 per_out = u(k) * u(k) * u(cin / groups);
    const u64 macs = u(ho) * u(wo) * per_out * u(cout);
    emit(name + ".conv", {2 * macs, macs, per_out * u(cout) + u(cout)});
    const u64 elems = u(ho) * u(wo) * u(cout);
    if (bn) emit(name + ".bn", {elems, 0, 2 * u(cout)});
    if (act) emit(name + ".act", {elems, 0, 0});
  }

  void squeeze_excite(const std::string& name, int channels, int reduced, int h, int w) {
    const u64 elems = u(channels) * u(h) * u(w);
    const u64 map = u(channels) * u(reduced);
    emit(name + ".pool", {elems, 0, 0});
    emit(name + ".reduce", {2 * map, map, map + u(reduced)});
    emit(name + ".reduce_act", {u(reduced), 0, 0});
    emit(name + ".expand", {2 * map, map, map + u(channels)});
    emit(name + ".sigmoid", {u(channels), 0, 0});
    emit(name + ".gate", {elems, 0, 0});
  }
};

}  // namespace

void CostReport::add(std::string name, const Cost& c) {
  per_layer.push_back({std::move(name), c});
  totals += c;
}

std::pair<int, int> layer_output_size(const LayerConfig& layer, int in_h, int in_w) {
  switch (layer.kind) {
    case BlockKind::Upsample: return {2 * in_h, 2 * in_w};
    case BlockKind::MaxPool: return {in_h / 2, in_w / 2};
    case BlockKind::Concat: return {in_h, in_w};
    default: return {conv_out(in_h, layer.stride), conv_out(in_w, layer.stride)};
  }
}

std::vector<CostEntry> layer_entries(const LayerConfig& layer, int in_h, int in_w, const std::string& prefix) {
  layer.validate();
  if (in_h < 1 || in_w < 1) throw InvalidInput("layer input dimensions must be positive");
  std::vector<CostEntry> out;
  Emitter e{out, prefix};
  const auto [ho, wo] = layer_output_size(layer, in_h, in_w);
  const int k = layer.kernel;
  switch (layer.kind) {
    case BlockKind::Conv: e.conv("", layer.in_ch, layer.out_ch, k, 1, ho, wo, true, true); break;
    case BlockKind::MBConv1:
    case BlockKind::MBConv6: {
      const int mid = layer.expanded_channels();
      if (layer.kind == BlockKind::MBConv6) e.conv(".expand", layer.in_ch, mid, 1, 1, in_h, in_w, true, true);
      e.conv(".dw", mid, mid, k, mid, ho, wo, true, true);
      e.squeeze_excite(".se", mid, layer.se_channels(), ho, wo);
      e.conv(".project", mid, layer.out_ch, 1, 1, ho, wo, true, false);
      if (layer.residual()) e.emit(".add", {u(ho) * u(wo) * u(layer.out_ch), 0, 0});
      break;
    }
    case BlockKind::DoubleConv:
      e.conv(".conv1", layer.in_ch, layer.out_ch, k, 1, ho, wo, true, true);
      e.conv(".conv2", layer.out_ch, layer.out_ch, k, 1, ho, wo, true, true);
      break;
    case BlockKind::FinalConv: e.conv("", layer.in_ch, layer.out_ch, k, 1, ho, wo, false, true); break;
    case BlockKind::Upsample: e.emit("", {u(ho) * u(wo) * u(layer.out_ch), 0, 0}); break;
    case BlockKind::MaxPool:
      if (in_h % 2 != 0 || in_w % 2 != 0) throw InvalidInput("max pooling needs even input dimensions");
      e.emit("", {u(in_h) * u(in_w) * u(layer.in_ch), 0, 0});
      break;
    case BlockKind::Concat: e.emit("", {}); break;
  }
  return out;
}

Cost layer_cost(const LayerConfig& layer, int in_h, int in_w) {
  Cost total;
  for (const CostEntry& e : layer_entries(layer, in_h, in_w)) total += e.cost;
  return total;
}

namespace {

CostReport cost_of(const std::vector<nn::ExpandedLayer>& layers) {
  CostReport report;
  for (const nn::ExpandedLayer& l : layers) {
    for (CostEntry& e : layer_entries(l.layer, l.in_h, l.in_w, l.name)) report.add(std::move(e.name), e.cost);
  }
  return report;
}

}  // namespace

CostReport network_cost(const nn::ArchConfig& arch, int input_h, int input_w) {
  arch.validate();
  const int f = arch.downsample_factor();
  if (input_h < 1 || input_w < 1 || input_h % f != 0 || input_w % f != 0) {
    throw InvalidInput("input " + std::to_string(input_h) + "x" + std::to_string(input_w) +
                       " is not divisible by the encoder downsampling factor " + std::to_string(f));
  }
  return cost_of(nn::expand_layers(arch, input_h, input_w));
}

void UNetConfig::validate() const {
  if (input_channels < 1) throw InvalidInput("unet: input_channels must be positive");
  if (levels < 2 || levels > 8) throw InvalidInput("unet: levels must be in [2, 8]");
  if (base_channels < 1) throw InvalidInput("unet: base_channels must be positive");
  if (!(width_multiplier > 0.0) || !std::isfinite(width_multiplier)) {
    throw InvalidInput("unet: width_multiplier must be positive");
  }
}

int UNetConfig::level_channels(int level) const { return nn::scale_channels(base_channels << level, width_multiplier); }

UNetConfig deepmb_unet_preset() {
  UNetConfig cfg;
  const FitResult fit = fit_width_multiplier(cfg, 416, 416, 32'400'000, 0.10);
  if (!fit.fitted) throw NumericalFailure("unet preset: no width multiplier reaches the parameter target");
  cfg.width_multiplier = fit.width_multiplier;
  return cfg;
}

std::vector<nn::ExpandedLayer> expand_unet(const UNetConfig& cfg, int input_h, int input_w) {
  cfg.validate();
  const int f = 1 << (cfg.levels - 1);
  if (input_h < 1 || input_w < 1 || input_h % f != 0 || input_w % f != 0) {
    throw InvalidInput("unet: input must be divisible by " + std::to_string(f));
  }
  std::vector<nn::ExpandedLayer> out;
  int h = input_h;
  int w = input_w;
  int channels = cfg.input_channels;
  for (int level = 0; level < cfg.levels; ++level) {
    const std::string name = "unet.enc." + std::to_string(level);
    if (level > 0) {
      out.push_back({name + ".pool", nn::make_layer(BlockKind::MaxPool, channels, channels), h, w});
      h /= 2;
      w /= 2;
    }
    out.push_back({name, nn::make_layer(BlockKind::DoubleConv, channels, cfg.level_channels(level)), h, w});
    channels = cfg.level_channels(level);
  }
  for (int level = cfg.levels - 2, j = 0; level >= 0; --level, ++j) {
    const std::string name = "unet.dec." + std::to_string(j);
    out.push_back({name + ".upsample", nn::make_layer(BlockKind::Upsample, channels, channels), h, w});
    h *= 2;
    w *= 2;
    const int skip = cfg.level_channels(level);
    out.push_back({name + ".concat", nn::make_layer(BlockKind::Concat, channels, channels + skip), h, w});
    out.push_back({name, nn::make_layer(BlockKind::DoubleConv, channels + skip, skip), h, w});
    channels = skip;
  }
  out.push_back({"unet.final", nn::make_layer(BlockKind::FinalConv, channels, 1), h, w});
  return out;
}

CostReport unet_cost(const UNetConfig& cfg, int input_h, int input_w) {
  return cost_of(expand_unet(cfg, input_h, input_w));
}

CostReport das_cost(std::uint64_t num_pixels, std::uint64_t num_detectors) {
  CostReport report;
  const u64 pairs = num_pixels * num_detectors;
  report.add("das.delay", {8 * pairs, 0, 0});
  report.add("das.interp", {4 * pairs, 2 * pairs, 0});
  report.add("das.normalize", {num_pixels, 0, 0});
  return report;
}

namespace {

FitResult fit_on_lattice(const std::function<u64(double)>& params_at, std::uint64_t target, double tol) {
  if (target == 0) throw InvalidInput("fit: target parameter count must be positive");
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidInput("fit: relative tolerance must lie in (0, 1)");
  const double lo = static_cast<double>(target) * (1.0 - tol);
  const double hi = static_cast<double>(target) * (1.0 + tol);
  auto mult = [](int m) { return static_cast<double>(m) / kFitLatticeDenominator; };

  // Smallest lattice index whose count reaches the lower bound; counts are
  // non-decreasing in the multiplier.
  int first = 1;
  int last = kFitLatticeMax + 1;  // sentinel: none reaches
  while (first < last) {
    const int mid = first + (last - first) / 2;
    if (static_cast<double>(params_at(mult(mid))) >= lo) {
      last = mid;
    } else {
      first = mid + 1;
    }
  }
  FitResult r;
  if (first <= kFitLatticeMax) {
    const u64 count = params_at(mult(first));
    if (static_cast<double>(count) <= hi) {
      r.fitted = true;
      r.width_multiplier = mult(first);
      r.achieved_params = count;
      return r;
    }
    r.nearest_above = FitPoint{mult(first), count};
  }
  if (first > 1) r.nearest_below = FitPoint{mult(first - 1), params_at(mult(first - 1))};
  return r;
}

}  // namespace

FitResult fit_width_multiplier(const nn::ArchConfig& arch_template, int input_h, int input_w,
                               std::uint64_t target_params, double tol_rel) {
  network_cost(arch_template, input_h, input_w);  // validates the template and input size
  return fit_on_lattice(
      [&](double m) {
        nn::ArchConfig a = arch_template;
        a.width_multiplier = m;
        return network_cost(a, input_h, input_w).totals.params;
      },
      target_params, tol_rel);
}

FitResult fit_width_multiplier(const UNetConfig& unet_template, int input_h, int input_w,
                               std::uint64_t target_params, double tol_rel) {
  unet_cost(unet_template, input_h, input_w);
  return fit_on_lattice(
      [&](double m) {
        UNetConfig c = unet_template;
        c.width_multiplier = m;
        return unet_cost(c, input_h, input_w).totals.params;
      },
      target_params, tol_rel);
}

std::string format_cost_table(const CostReport& report, const std::string& title) {
  std::ostringstream os;
  char line[160];
  os << title << '\n';
  std::snprintf(line, sizeof line, "%-32s %18s %18s %14s\n", "layer", "FLOPs", "MACs", "params");
  os << line;
  for (const CostEntry& e : report.per_layer) {
    std::snprintf(line, sizeof line, "%-32s %18llu %18llu %14llu\n", e.name.c_str(),
                  static_cast<unsigned long long>(e.cost.flops), static_cast<unsigned long long>(e.cost.macs),
                  static_cast<unsigned long long>(e.cost.params));
    os << line;
  }
  std::snprintf(line, sizeof line, "%-32s %18llu %18llu %14llu\n", "total",
                static_cast<unsigned long long>(report.totals.flops),
                static_cast<unsigned long long>(report.totals.macs),
                static_cast<unsigned long long>(report.totals.params));
  os << line;
  std::snprintf(line, sizeof line, "%-32s %17.2fG %17.2fG %13.2fM\n", "", report.totals.flops / 1e9,
                report.totals.macs / 1e9, report.totals.params / 1e6);
  os << line;
  return os.str();
}

void put_cost(KeyValueMap& kv, const std::string& prefix, const CostReport& report, bool per_layer) {
  kv.set(prefix + "flops", std::to_string(report.totals.flops));
  kv.set(prefix + "macs", std::to_string(report.totals.macs));
  kv.set(prefix + "params", std::to_string(report.totals.params));
  if (!per_layer) return;
  for (const CostEntry& e : report.per_layer) {
    kv.set(prefix + "layer." + e.name, std::to_string(e.cost.flops) + " " + std::to_string(e.cost.macs) + " " +
                                          std::to_string(e.cost.params));
  }
}

}  // namespace oareco
