#include "oareco/nn/arch.hpp"

#include <cmath>
#include <sstream>

#include "oareco/error.hpp"

namespace oareco::nn {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

bool is_encoder_kind(BlockKind k) {
  return k == BlockKind::Conv || k == BlockKind::MBConv1 || k == BlockKind::MBConv6;
}

std::vector<int> parse_ints(const std::string& key, const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(token, &used));
      require(used == token.size(), "");
    } catch (const std::exception&) {
      throw InvalidInput("key '" + key + "': '" + token + "' is not an integer");
    }
  }
  return out;
}

std::string join(const std::vector<int>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? " " : "") + std::to_string(values[i]);
  return s;
}

void add_conv_unit(std::vector<TensorSpec>& out, const std::string& prefix, std::size_t cout, std::size_t cin_per_group,
                   std::size_t k, bool with_bn) {
  out.push_back({prefix + ".conv.weight", {cout, cin_per_group, k, k}, true});
  out.push_back({prefix + ".conv.bias", {cout}, true});
  if (!with_bn) return;
  out.push_back({prefix + ".bn.weight", {cout}, true});
  out.push_back({prefix + ".bn.bias", {cout}, true});
  out.push_back({prefix + ".bn.running_mean", {cout}, false});
  out.push_back({prefix + ".bn.running_var", {cout}, false});
}

}  // namespace

const char* to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Conv: return "Conv";
    case BlockKind::MBConv1: return "MBConv1";
    case BlockKind::MBConv6: return "MBConv6";
    case BlockKind::DoubleConv: return "DoubleConv";
    case BlockKind::Upsample: return "Upsample";
    case BlockKind::Concat: return "Concat";
    case BlockKind::FinalConv: return "FinalConv";
    case BlockKind::MaxPool: return "MaxPool";
  }
  return "?";
}

BlockKind block_kind_from_string(const std::string& text) {
  for (BlockKind k : {BlockKind::Conv, BlockKind::MBConv1, BlockKind::MBConv6, BlockKind::DoubleConv,
                      BlockKind::Upsample, BlockKind::Concat, BlockKind::FinalConv, BlockKind::MaxPool}) {
    if (text == to_string(k)) return k;
  }
  throw InvalidInput("unknown block kind '" + text + "'");
}

void LayerConfig::validate() const {
  const std::string what = std::string(to_string(kind)) + " layer";
  require(in_ch >= 1 && out_ch >= 1, what + ": channel counts must be positive");
  require(stride == 1 || stride == 2, what + ": stride must be 1 or 2");
  require(kernel == 3, what + ": kernel must be 3");
  require(se_reduction >= 1, what + ": SE reduction must be positive");
  switch (kind) {
    case BlockKind::MBConv6: require(expansion == 6, what + ": expansion must be 6"); break;
    case BlockKind::MBConv1: require(expansion == 1, what + ": expansion must be 1"); break;
    case BlockKind::Upsample:
    case BlockKind::MaxPool: require(in_ch == out_ch, what + ": channels must be preserved"); break;
    case BlockKind::DoubleConv:
    case BlockKind::FinalConv:
    case BlockKind::Concat: require(stride == 1, what + ": stride must be 1"); break;
    case BlockKind::Conv: break;
  }
}

LayerConfig make_layer(BlockKind kind, int in_ch, int out_ch, int stride) {
  LayerConfig l;
  l.kind = kind;
  l.in_ch = in_ch;
  l.out_ch = out_ch;
  l.stride = stride;
  l.expansion = kind == BlockKind::MBConv6 ? 6 : 1;
  return l;
}

int scale_channels(int base, double multiplier) {
  const double scaled = std::floor(base * multiplier / 8.0 + 0.5) * 8.0;
  return std::max(8, static_cast<int>(scaled));
}

ArchConfig ArchConfig::scaled() const {
  ArchConfig out = *this;
  int in = input_channels;
  for (LayerConfig& l : out.encoder) {
    l.in_ch = in;
    l.out_ch = scale_channels(l.out_ch, width_multiplier);
    in = l.out_ch;
  }
  for (int& c : out.decoder_channels) c = scale_channels(c, width_multiplier);
  out.width_multiplier = 1.0;
  return out;
}

int ArchConfig::downsample_factor() const {
  int f = 1;
  for (const LayerConfig& l : encoder) f *= l.stride;
  return f;
}

void ArchConfig::validate() const {
  require(input_channels >= 1, "input_channels must be positive");
  require(std::isfinite(width_multiplier) && width_multiplier > 0.0, "width_multiplier must be positive");
  require(std::isfinite(bn_eps) && bn_eps >= 0.0, "bn_eps must be >= 0");
  require(encoder.size() == kEncoderBlocks,
          "encoder must have exactly 7 blocks, got " + std::to_string(encoder.size()));
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    require(is_encoder_kind(encoder[i].kind), "encoder block " + std::to_string(i) + " has a decoder-only kind");
    encoder[i].validate();
  }
  require(!skip_taps.empty(), "at least one skip tap is required");
  require(skip_taps.size() == decoder_channels.size(), "decoder needs one stage per skip tap");
  for (std::size_t i = 0; i < skip_taps.size(); ++i) {
    require(skip_taps[i] >= 0 && skip_taps[i] < kEncoderBlocks - 1,
            "skip tap " + std::to_string(skip_taps[i]) + " must index a block before the bottleneck");
    require(i == 0 || skip_taps[i] > skip_taps[i - 1], "skip taps must be strictly ascending");
  }
  for (int c : decoder_channels) require(c >= 1, "decoder channels must be positive");

  std::vector<int> factor(encoder.size());
  int f = 1;
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    f *= encoder[i].stride;
    factor[i] = f;
  }
  int current = f;
  for (auto it = skip_taps.rbegin(); it != skip_taps.rend(); ++it) {
    require(current == 2 * factor[static_cast<std::size_t>(*it)],
            "skip tap after block " + std::to_string(*it) + " is not at twice the resolution of the decoder input");
    current = factor[static_cast<std::size_t>(*it)];
  }
  require(current == 1, "decoder does not restore the input resolution");
  require(input_size >= 1 && input_size % f == 0,
          "input size " + std::to_string(input_size) + " must be a positive multiple of " + std::to_string(f));
}

ArchConfig default_arch(int input_size) {
  ArchConfig a;
  a.name = "efficientdeepmb";
  a.input_size = input_size;
  a.encoder = {
      make_layer(BlockKind::Conv, 1, 32, 1),     make_layer(BlockKind::MBConv1, 32, 16, 1),
      make_layer(BlockKind::MBConv6, 16, 24, 2), make_layer(BlockKind::MBConv6, 24, 40, 2),
      make_layer(BlockKind::MBConv6, 40, 80, 2), make_layer(BlockKind::MBConv6, 80, 112, 1),
      make_layer(BlockKind::MBConv6, 112, 192, 2),
  };
  a.skip_taps = {1, 2, 3, 5};
  a.decoder_channels = {112, 40, 24, 16};
  return a;
}

std::vector<ExpandedLayer> expand_layers(const ArchConfig& arch_in, int input_h, int input_w) {
  arch_in.validate();
  require(input_h >= 1 && input_w >= 1, "input dimensions must be positive");
  const ArchConfig arch = arch_in.scaled();
  std::vector<ExpandedLayer> out;
  int h = input_h;
  int w = input_w;
  struct Tap {
    int channels, h, w;
  };
  std::vector<Tap> taps;
  for (std::size_t i = 0; i < arch.encoder.size(); ++i) {
    const LayerConfig& l = arch.encoder[i];
    out.push_back({"encoder." + std::to_string(i), l, h, w});
    h = (h + l.stride - 1) / l.stride;
    w = (w + l.stride - 1) / l.stride;
    for (int t : arch.skip_taps) {
      if (t == static_cast<int>(i)) taps.push_back({l.out_ch, h, w});
    }
  }
  int channels = arch.encoder.back().out_ch;
  for (std::size_t j = 0; j < taps.size(); ++j) {
    const Tap& skip = taps[taps.size() - 1 - j];
    const std::string prefix = "decoder." + std::to_string(j);
    out.push_back({prefix + ".upsample", make_layer(BlockKind::Upsample, channels, channels), h, w});
    h *= 2;
    w *= 2;
    require(h == skip.h && w == skip.w, prefix + ": upsampled size does not match the skip tensor");
    out.push_back({prefix + ".concat", make_layer(BlockKind::Concat, channels, channels + skip.channels), h, w});
    out.push_back({prefix, make_layer(BlockKind::DoubleConv, channels + skip.channels, arch.decoder_channels[j]), h, w});
    channels = arch.decoder_channels[j];
  }
  out.push_back({"final", make_layer(BlockKind::FinalConv, channels, 1), h, w});
  return out;
}

std::vector<TensorSpec> expected_manifest(const ArchConfig& arch_in) {
  arch_in.validate();
  const ArchConfig arch = arch_in.scaled();
  std::vector<TensorSpec> out;
  // Spatial sizes do not affect the manifest; any valid input size works here.
  for (const ExpandedLayer& e : expand_layers(arch, arch.input_size, arch.input_size)) {
    const LayerConfig& l = e.layer;
    const auto k = static_cast<std::size_t>(l.kernel);
    const auto cin = static_cast<std::size_t>(l.in_ch);
    const auto cout = static_cast<std::size_t>(l.out_ch);
    switch (l.kind) {
      case BlockKind::Conv: add_conv_unit(out, e.name, cout, cin, k, true); break;
      case BlockKind::MBConv6:
      case BlockKind::MBConv1: {
        const auto mid = static_cast<std::size_t>(l.expanded_channels());
        const auto se = static_cast<std::size_t>(l.se_channels());
        if (l.kind == BlockKind::MBConv6) add_conv_unit(out, e.name + ".expand", mid, cin, 1, true);
        add_conv_unit(out, e.name + ".dw", mid, 1, k, true);
        out.push_back({e.name + ".se.reduce.weight", {se, mid, 1, 1}, true});
        out.push_back({e.name + ".se.reduce.bias", {se}, true});
        out.push_back({e.name + ".se.expand.weight", {mid, se, 1, 1}, true});
        out.push_back({e.name + ".se.expand.bias", {mid}, true});
        add_conv_unit(out, e.name + ".project", cout, mid, 1, true);
        break;
      }
      case BlockKind::DoubleConv:
        add_conv_unit(out, e.name + ".conv1", cout, cin, k, true);
        add_conv_unit(out, e.name + ".conv2", cout, cout, k, true);
        break;
      case BlockKind::FinalConv: add_conv_unit(out, e.name, cout, cin, k, false); break;
      case BlockKind::Upsample:
      case BlockKind::Concat:
      case BlockKind::MaxPool: break;
    }
  }
  return out;
}

std::size_t manifest_parameter_count(const ArchConfig& arch) {
  std::size_t total = 0;
  for (const TensorSpec& t : expected_manifest(arch)) {
    if (!t.learnable) continue;
    std::size_t n = 1;
    for (std::size_t d : t.shape) n *= d;
    total += n;
  }
  return total;
}

ArchConfig arch_from_sidecar(const KeyValueMap& kv) {
  std::vector<std::string_view> allowed{"name",   "input_channels",      "input_size", "width_multiplier",
                                        "bn_eps", "input_normalization", "skip_taps",  "decoder"};
  std::vector<std::string> encoder_keys;
  for (int i = 0; i < ArchConfig::kEncoderBlocks; ++i) encoder_keys.push_back("encoder." + std::to_string(i));
  for (const std::string& k : encoder_keys) allowed.push_back(k);
  kv.require_known(allowed);

  ArchConfig a;
  if (auto v = kv.find("name")) a.name = *v;
  a.input_channels = static_cast<int>(kv.contains("input_channels") ? kv.get_int("input_channels") : 1);
  a.input_size = static_cast<int>(kv.get_int("input_size"));
  a.width_multiplier = kv.get_double_or("width_multiplier", 1.0);
  a.bn_eps = kv.get_double_or("bn_eps", 1e-3);
  if (auto v = kv.find("input_normalization")) {
    if (*v == "none") {
      a.input_normalization = InputNormalization::none;
    } else if (*v == "max_abs") {
      a.input_normalization = InputNormalization::max_abs;
    } else {
      throw InvalidInput("input_normalization must be 'none' or 'max_abs'");
    }
  }
  int in = a.input_channels;
  for (const std::string& key : encoder_keys) {
    std::istringstream line(kv.get(key));
    std::string kind;
    int out_ch = 0;
    int stride = 0;
    std::string extra;
    if (!(line >> kind >> out_ch >> stride) || (line >> extra)) {
      throw InvalidInput("key '" + key + "' must read '<kind> <out_channels> <stride>'");
    }
    a.encoder.push_back(make_layer(block_kind_from_string(kind), in, out_ch, stride));
    in = out_ch;
  }
  a.skip_taps = parse_ints("skip_taps", kv.get("skip_taps"));
  a.decoder_channels = parse_ints("decoder", kv.get("decoder"));
  a.validate();
  return a;
}

KeyValueMap arch_to_sidecar(const ArchConfig& a) {
  KeyValueMap kv;
  kv.set("name", a.name);
  kv.set("input_channels", static_cast<long long>(a.input_channels));
  kv.set("input_size", static_cast<long long>(a.input_size));
  kv.set("width_multiplier", a.width_multiplier);
  kv.set("bn_eps", a.bn_eps);
  kv.set("input_normalization", std::string(a.input_normalization == InputNormalization::none ? "none" : "max_abs"));
  for (std::size_t i = 0; i < a.encoder.size(); ++i) {
    const LayerConfig& l = a.encoder[i];
    kv.set("encoder." + std::to_string(i),
           std::string(to_string(l.kind)) + " " + std::to_string(l.out_ch) + " " + std::to_string(l.stride));
  }
  kv.set("skip_taps", join(a.skip_taps));
  kv.set("decoder", join(a.decoder_channels));
  return kv;
}

}  // namespace oareco::nn
