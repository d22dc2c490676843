#include "oareco/nn/weights.hpp"

#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "oareco/error.hpp"
#include "oareco/oarr.hpp"

namespace oareco::nn {

void check_manifest(const ArchConfig& arch, const ModelWeights& weights) {
  const std::vector<TensorSpec> manifest = expected_manifest(arch);
  std::set<std::string> expected;
  for (const TensorSpec& spec : manifest) {
    expected.insert(spec.name);
    const auto it = weights.find(spec.name);
    if (it == weights.end()) throw ManifestError(spec.name, "missing");
    if (it->second.dims() != spec.shape) {
      Tensor probe(spec.shape);
      throw ManifestError(spec.name, "shape " + it->second.shape_string() + " but expected " + probe.shape_string());
    }
    if (!it->second.all_finite()) throw ManifestError(spec.name, "contains non-finite values");
  }
  for (const auto& [name, tensor] : weights) {
    if (!expected.contains(name)) throw ManifestError(name, "not part of the architecture");
  }
}

ModelWeights random_weights(const ArchConfig& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](float lo, float hi) { return std::uniform_real_distribution<float>(lo, hi)(rng); };
  ModelWeights out;
  for (const TensorSpec& spec : expected_manifest(arch)) {
    Tensor t(spec.shape);
    auto data = t.data();
    const std::string& n = spec.name;
    auto ends_with = [&](const char* suffix) {
      const std::string s(suffix);
      return n.size() >= s.size() && n.compare(n.size() - s.size(), s.size(), s) == 0;
    };
    if (spec.shape.size() == 4) {
      const auto fan_in = static_cast<float>(spec.shape[1] * spec.shape[2] * spec.shape[3]);
      const float bound = std::sqrt(6.0f / fan_in);
      for (float& v : data) v = uniform(-bound, bound);
    } else if (ends_with(".bn.weight") || ends_with(".bn.running_var")) {
      for (float& v : data) v = uniform(0.5f, 1.5f);
    } else {
      for (float& v : data) v = uniform(-0.1f, 0.1f);
    }
    out.emplace(n, std::move(t));
  }
  return out;
}

void save_weights(const std::filesystem::path& path, const ArchConfig& arch, const ModelWeights& weights) {
  check_manifest(arch, weights);
  std::vector<ArrayRecord> records;
  for (const TensorSpec& spec : expected_manifest(arch)) {
    const Tensor& t = weights.at(spec.name);
    ArrayRecord rec;
    rec.name = spec.name;
    rec.dtype = DType::f32;
    for (std::size_t d : t.dims()) rec.dims.push_back(static_cast<std::uint32_t>(d));
    rec.values.assign(t.data().begin(), t.data().end());
    records.push_back(std::move(rec));
  }
  write_archive(path, records);
}

ModelWeights load_weights(const std::filesystem::path& path) {
  ModelWeights out;
  for (const ArrayRecord& rec : read_archive(path)) {
    if (rec.dtype == DType::bytes) throw ManifestError(rec.name, "is not a numeric tensor");
    std::vector<std::size_t> dims(rec.dims.begin(), rec.dims.end());
    std::vector<float> values(rec.values.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<float>(rec.values[i]);
    if (!out.emplace(rec.name, Tensor(std::move(dims), std::move(values))).second) {
      throw ManifestError(rec.name, "appears twice in " + path.string());
    }
  }
  return out;
}

}  // namespace oareco::nn
