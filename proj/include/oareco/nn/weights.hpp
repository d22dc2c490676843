#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "oareco/nn/arch.hpp"
#include "oareco/nn/tensor.hpp"

namespace oareco::nn {

/// Named weight tensors, including batch-norm running statistics.
using ModelWeights = std::map<std::string, Tensor>;

/// Throws ManifestError naming the first missing, unexpected or mis-shaped tensor.
void check_manifest(const ArchConfig& arch, const ModelWeights& weights);

/// Deterministic random initialisation for every manifest tensor: He-uniform
/// convolution weights, small biases, BN gamma in [0.5, 1.5], beta and mean in
/// [-0.1, 0.1], running variance in [0.5, 1.5].
ModelWeights random_weights(const ArchConfig& arch, std::uint64_t seed);

/// OARR1 archive in manifest order, binary32.
void save_weights(const std::filesystem::path& path, const ArchConfig& arch, const ModelWeights& weights);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace oareco::nn
