#include "oareco/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "oareco/error.hpp"

namespace oareco::nn {

namespace {

std::vector<float> vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

const Tensor& fetch(const ModelWeights& w, const std::string& name) {
  const auto it = w.find(name);
  if (it == w.end()) throw ManifestError(name, "missing");
  return it->second;
}

ConvUnit make_unit(const ModelWeights& w, const std::string& prefix, int stride, int groups, bool bn, Activation act,
                   float eps) {
  ConvUnit u;
  u.weight = fetch(w, prefix + ".conv.weight");
  u.bias = vec(fetch(w, prefix + ".conv.bias"));
  u.has_bn = bn;
  if (bn) {
    u.gamma = vec(fetch(w, prefix + ".bn.weight"));
    u.beta = vec(fetch(w, prefix + ".bn.bias"));
    u.mean = vec(fetch(w, prefix + ".bn.running_mean"));
    u.var = vec(fetch(w, prefix + ".bn.running_var"));
  }
  u.eps = eps;
  u.stride = stride;
  u.groups = groups;
  u.act = act;
  return u;
}

}  // namespace

Tensor ConvUnit::operator()(const Tensor& x) const {
  Tensor y = conv2d(x, weight, bias, stride, groups);
  if (has_bn) {
    batch_norm(y, {gamma, beta, mean, var, eps}, act);
  } else if (act == Activation::relu) {
    relu_inplace(y);
  } else if (act == Activation::silu) {
    for (float& v : y.data()) v = silu(v);
  }
  return y;
}

Tensor MBConvBlock::operator()(const Tensor& x) const {
  Tensor h = expand ? (*expand)(x) : x;
  h = depthwise(h);
  h = se(h);
  h = project(h);
  if (residual) add_inplace(h, x);
  return h;
}

MBConvBlock make_mbconv(const LayerConfig& cfg, const ModelWeights& weights, const std::string& prefix, float bn_eps) {
  cfg.validate();
  if (cfg.kind != BlockKind::MBConv1 && cfg.kind != BlockKind::MBConv6) {
    throw InvalidInput(prefix + ": not an MBConv layer");
  }
  const int mid = cfg.expanded_channels();
  MBConvBlock b;
  if (cfg.kind == BlockKind::MBConv6) {
    b.expand = std::make_unique<ConvUnit>(make_unit(weights, prefix + ".expand", 1, 1, true, Activation::silu, bn_eps));
  }
  b.depthwise = make_unit(weights, prefix + ".dw", cfg.stride, mid, true, Activation::silu, bn_eps);
  b.se = {fetch(weights, prefix + ".se.reduce.weight"), vec(fetch(weights, prefix + ".se.reduce.bias")),
          fetch(weights, prefix + ".se.expand.weight"), vec(fetch(weights, prefix + ".se.expand.bias"))};
  b.project = make_unit(weights, prefix + ".project", 1, 1, true, Activation::none, bn_eps);
  b.residual = cfg.residual();

  // Shape checks so a mismatch names the tensor instead of failing mid-inference.
  auto expect = [&](const std::string& name, const Tensor& t, std::vector<std::size_t> shape) {
    if (t.dims() != shape) throw ManifestError(name, "shape " + t.shape_string() + " does not match the layer");
  };
  const auto in = static_cast<std::size_t>(cfg.in_ch);
  const auto m = static_cast<std::size_t>(mid);
  const auto se = static_cast<std::size_t>(cfg.se_channels());
  const auto out = static_cast<std::size_t>(cfg.out_ch);
  if (b.expand) expect(prefix + ".expand.conv.weight", b.expand->weight, {m, in, 1, 1});
  expect(prefix + ".dw.conv.weight", b.depthwise.weight, {m, 1, 3, 3});
  expect(prefix + ".se.reduce.weight", b.se.w_reduce, {se, m, 1, 1});
  expect(prefix + ".se.expand.weight", b.se.w_expand, {m, se, 1, 1});
  expect(prefix + ".project.conv.weight", b.project.weight, {out, m, 1, 1});
  return b;
}

Tensor mbconv(const Tensor& input, const LayerConfig& cfg, const ModelWeights& weights, const std::string& prefix,
              float bn_eps) {
  return make_mbconv(cfg, weights, prefix, bn_eps)(input);
}

Model Model::build(const ArchConfig& arch_in, const ModelWeights& weights) {
  arch_in.validate();
  check_manifest(arch_in, weights);
  Model m;
  m.arch_ = arch_in.scaled();
  const ArchConfig& arch = m.arch_;
  const auto eps = static_cast<float>(arch.bn_eps);

  for (const TensorSpec& spec : expected_manifest(arch)) {
    if (!spec.learnable) continue;
    std::size_t n = 1;
    for (std::size_t d : spec.shape) n *= d;
    m.parameter_count_ += n;
  }

  for (const ExpandedLayer& e : expand_layers(arch, arch.input_size, arch.input_size)) {
    const LayerConfig& l = e.layer;
    switch (l.kind) {
      case BlockKind::Conv: {
        auto block = std::make_shared<EncoderBlock>();
        block->conv = std::make_unique<ConvUnit>(make_unit(weights, e.name, l.stride, 1, true, Activation::silu, eps));
        m.encoder_.push_back(std::move(block));
        break;
      }
      case BlockKind::MBConv1:
      case BlockKind::MBConv6: {
        auto block = std::make_shared<EncoderBlock>();
        block->mb = std::make_unique<MBConvBlock>(make_mbconv(l, weights, e.name, eps));
        m.encoder_.push_back(std::move(block));
        break;
      }
      case BlockKind::DoubleConv: {
        auto block = std::make_shared<DecoderBlock>();
        block->conv1 = make_unit(weights, e.name + ".conv1", 1, 1, true, Activation::relu, eps);
        block->conv2 = make_unit(weights, e.name + ".conv2", 1, 1, true, Activation::relu, eps);
        m.decoder_.push_back(std::move(block));
        break;
      }
      case BlockKind::FinalConv:
        m.final_ = std::make_shared<ConvUnit>(make_unit(weights, e.name, 1, 1, false, Activation::relu, eps));
        break;
      case BlockKind::Upsample:
      case BlockKind::Concat:
      case BlockKind::MaxPool: break;
    }
  }

  std::size_t h = static_cast<std::size_t>(arch.input_size);
  for (std::size_t i = 0; i < arch.encoder.size(); ++i) {
    const auto s = static_cast<std::size_t>(arch.encoder[i].stride);
    h = (h + s - 1) / s;
    if (std::find(arch.skip_taps.begin(), arch.skip_taps.end(), static_cast<int>(i)) != arch.skip_taps.end()) {
      m.taps_.push_back({static_cast<int>(i), static_cast<std::size_t>(arch.encoder[i].out_ch), h, h});
    }
  }
  return m;
}

Tensor Model::forward(const Tensor& input) const {
  const auto side = static_cast<std::size_t>(arch_.input_size);
  if (input.rank() != 3 || input.channels() != static_cast<std::size_t>(arch_.input_channels) ||
      input.height() != side || input.width() != side) {
    throw InvalidInput("network expects input (" + std::to_string(arch_.input_channels) + ", " +
                       std::to_string(side) + ", " + std::to_string(side) + "), got " + input.shape_string());
  }
  std::vector<Tensor> skips;
  Tensor x = input;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const EncoderBlock& b = *encoder_[i];
    x = b.conv ? (*b.conv)(x) : (*b.mb)(x);
    if (std::find(arch_.skip_taps.begin(), arch_.skip_taps.end(), static_cast<int>(i)) != arch_.skip_taps.end()) {
      skips.push_back(x);
    }
  }
  for (std::size_t j = 0; j < decoder_.size(); ++j) {
    const Tensor& skip = skips[skips.size() - 1 - j];
    x = concat_channels(upsample_bilinear2x(x), skip);
    x = decoder_[j]->conv2(decoder_[j]->conv1(x));
  }
  return (*final_)(x);
}

Image Model::infer(const Image& das_image) const {
  const std::size_t side = das_image.data().rows();
  if (static_cast<int>(side) != arch_.input_size) {
    throw InvalidInput("image side " + std::to_string(side) + " does not match the network input size " +
                       std::to_string(arch_.input_size));
  }
  if (arch_.input_channels != 1) throw InvalidInput("image inference needs a single-channel network");
  double scale = 1.0;
  if (arch_.input_normalization == InputNormalization::max_abs) {
    double peak = 0.0;
    for (double v : das_image.values()) peak = std::max(peak, std::abs(v));
    if (peak > 0.0) scale = 1.0 / peak;
  }
  std::vector<float> data(das_image.values().size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(das_image.values()[i] * scale);
  const Tensor out = forward(Tensor({1, side, side}, std::move(data)));
  std::vector<double> pixels(out.data().begin(), out.data().end());
  return Image(Matrix(side, side, std::move(pixels)), das_image.grid());
}

}  // namespace oareco::nn
