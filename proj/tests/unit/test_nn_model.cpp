#include <doctest.h>

#include <random>

#include "../reference/naive_nn.hpp"
#include "helpers.hpp"
#include "oareco/cost_model.hpp"
#include "oareco/error.hpp"
#include "oareco/nn/model.hpp"
#include "oareco/nn/weights.hpp"

using namespace oareco;
using namespace oareco::nn;

namespace {

Tensor random_input(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor t({1, side, side});
  for (float& v : t.data()) v = u(rng);
  return t;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  std::vector<float> d(a.data().begin(), a.data().end());
  d.insert(d.end(), b.data().begin(), b.data().end());
  return Tensor({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)}, std::move(d));
}

/// Whole network composed from the naive layers.
Tensor reference_forward(const ArchConfig& arch_in, const ModelWeights& w, const Tensor& input) {
  const ArchConfig arch = arch_in.scaled();
  std::vector<Tensor> skips;
  Tensor x = input;
  for (std::size_t i = 0; i < arch.encoder.size(); ++i) {
    const LayerConfig& l = arch.encoder[i];
    const std::string p = "encoder." + std::to_string(i);
    x = l.kind == BlockKind::Conv ? ref::conv_unit(x, w, p, l.stride, 1, true, ref::Act::silu, arch.bn_eps)
                                  : ref::mbconv(x, l, w, p, arch.bn_eps);
    for (int t : arch.skip_taps) {
      if (t == static_cast<int>(i)) skips.push_back(x);
    }
  }
  for (std::size_t j = 0; j < arch.decoder_channels.size(); ++j) {
    const std::string p = "decoder." + std::to_string(j);
    x = concat(ref::upsample2x(x), skips[skips.size() - 1 - j]);
    x = ref::conv_unit(x, w, p + ".conv1", 1, 1, true, ref::Act::relu, arch.bn_eps);
    x = ref::conv_unit(x, w, p + ".conv2", 1, 1, true, ref::Act::relu, arch.bn_eps);
  }
  return ref::conv_unit(x, w, "final", 1, 1, false, ref::Act::relu, arch.bn_eps);
}

}  // namespace

TEST_CASE("channel scaling rounds to multiples of eight") {
  CHECK(scale_channels(32, 1.0) == 32);
  CHECK(scale_channels(16, 0.25) == 8);
  CHECK(scale_channels(24, 1.5) == 40);  // 36 -> 40, halves round up
  CHECK(scale_channels(40, 0.1) == 8);
  CHECK(scale_channels(112, 2.0) == 224);
}

TEST_CASE("architecture validation") {
  ArchConfig a = default_arch(64);
  CHECK_NOTHROW(a.validate());
  CHECK(a.downsample_factor() == 16);

  ArchConfig bad = a;
  bad.encoder.pop_back();
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = a;
  bad.skip_taps = {1, 2, 3};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = a;
  bad.skip_taps = {2, 1, 3, 5};
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = a;
  bad.input_size = 40;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = a;
  bad.width_multiplier = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  bad = a;
  bad.encoder[3].kind = BlockKind::DoubleConv;
  CHECK_THROWS_AS(bad.validate(), InvalidInput);
  CHECK_THROWS_AS(block_kind_from_string("Conv7"), InvalidInput);
}

TEST_CASE("sidecar round trip") {
  ArchConfig a = default_arch(128);
  a.width_multiplier = 1.25;
  a.input_normalization = InputNormalization::max_abs;
  const KeyValueMap kv = arch_to_sidecar(a);
  const ArchConfig b = arch_from_sidecar(KeyValueMap::parse(kv.to_string()));
  CHECK(b.name == a.name);
  CHECK(b.input_size == 128);
  CHECK(b.width_multiplier == 1.25);
  CHECK(b.input_normalization == InputNormalization::max_abs);
  CHECK(b.skip_taps == a.skip_taps);
  CHECK(b.decoder_channels == a.decoder_channels);
  for (std::size_t i = 0; i < a.encoder.size(); ++i) {
    CHECK(b.encoder[i].kind == a.encoder[i].kind);
    CHECK(b.encoder[i].out_ch == a.encoder[i].out_ch);
    CHECK(b.encoder[i].stride == a.encoder[i].stride);
  }
  KeyValueMap extra = KeyValueMap::parse(kv.to_string() + "colour=blue\n");
  CHECK_THROWS_AS(arch_from_sidecar(extra), InvalidInput);
}

TEST_CASE("parameter counts agree between manifest, model and cost model") {
  for (double w : {0.5, 1.0, 1.75}) {
    ArchConfig a = default_arch(32);
    a.width_multiplier = w;
    const Model m = Model::build(a, random_weights(a, 3));
    CHECK(m.parameter_count() == manifest_parameter_count(a));
    CHECK(m.parameter_count() == network_cost(a, 32, 32).totals.params);
  }
}

TEST_CASE("forward pass matches the composed oracle") {
  const ArchConfig a = default_arch(32);
  const ModelWeights w = random_weights(a, 7);
  const Model m = Model::build(a, w);
  const Tensor x = random_input(32, 1);
  const Tensor y = m.forward(x);
  CHECK(y.dims() == std::vector<std::size_t>{1, 32, 32});
  CHECK(y.all_finite());
  for (float v : y.data()) CHECK(v >= 0.0f);
  CHECK(ref::max_rel_diff(y, reference_forward(a, w, x)) <= 1e-4);
}

TEST_CASE("skip tap shapes") {
  const Model m = Model::build(default_arch(64), random_weights(default_arch(64), 0));
  const auto& taps = m.tap_shapes();
  REQUIRE(taps.size() == 4);
  CHECK(taps[0].encoder_index == 1);
  CHECK(taps[0].channels == 16);
  CHECK(taps[0].height == 64);
  CHECK(taps[1].channels == 24);
  CHECK(taps[1].height == 32);
  CHECK(taps[2].channels == 40);
  CHECK(taps[2].height == 16);
  CHECK(taps[3].channels == 112);
  CHECK(taps[3].height == 8);
}

TEST_CASE("manifest errors name the offending tensor") {
  const ArchConfig a = default_arch(32);
  const ModelWeights good = random_weights(a, 1);

  ModelWeights missing = good;
  missing.erase("encoder.4.dw.bn.running_var");
  try {
    (void)Model::build(a, missing);
    FAIL("expected an error");
  } catch (const ManifestError& e) {
    CHECK(e.tensor() == "encoder.4.dw.bn.running_var");
  }

  ModelWeights shaped = good;
  shaped["decoder.1.conv2.conv.weight"] = Tensor({3, 3, 3, 3});
  try {
    (void)Model::build(a, shaped);
    FAIL("expected an error");
  } catch (const ManifestError& e) {
    CHECK(e.tensor() == "decoder.1.conv2.conv.weight");
  }

  ModelWeights extra = good;
  extra["decoder.9.conv.weight"] = Tensor({1});
  try {
    (void)Model::build(a, extra);
    FAIL("expected an error");
  } catch (const ManifestError& e) {
    CHECK(e.tensor() == "decoder.9.conv.weight");
  }
}

TEST_CASE("weights survive a save and load") {
  testutil::TempDir dir;
  const ArchConfig a = default_arch(32);
  const ModelWeights w = random_weights(a, 12);
  save_weights(dir / "w.oarr", a, w);
  const ModelWeights back = load_weights(dir / "w.oarr");
  CHECK(back == w);
  CHECK(random_weights(a, 12) == w);
  CHECK_FALSE(random_weights(a, 13) == w);
}

TEST_CASE("input shape and size errors") {
  const ArchConfig a = default_arch(32);
  const Model m = Model::build(a, random_weights(a, 1));
  CHECK_THROWS_AS(m.forward(random_input(48, 1)), InvalidInput);
  CHECK_THROWS_AS(m.infer(Image(ImageGrid{64, 1e-4, {}})), InvalidInput);
  CHECK_THROWS_AS(default_arch(24).validate(), InvalidInput);
}

TEST_CASE("inference keeps the grid and is deterministic across workers") {
  const ArchConfig a = default_arch(64);
  const Model m = Model::build(a, random_weights(a, 5));
  const ImageGrid grid{64, 2.5e-4, {0.001, 0.0}};
  const Image das(testutil::random_matrix(64, 64, 9), grid);
  Tensor first;
  {
    testutil::WorkerLimit one(1);
    first = m.forward(random_input(64, 2));
  }
  testutil::WorkerLimit three(3);
  CHECK(m.forward(random_input(64, 2)) == first);
  const Image out = m.infer(das);
  CHECK(out.grid() == grid);
}
