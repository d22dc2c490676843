#include "oareco/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "oareco/error.hpp"

namespace oareco::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.empty()) throw InvalidInput("tensor needs at least one dimension");
  for (std::size_t d : dims) {
    if (d == 0) throw InvalidInput("tensor dimensions must be positive");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  check_dims(dims_);
  data_.assign(product(dims_), 0.0f);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<float> data) : dims_(std::move(dims)), data_(std::move(data)) {
  check_dims(dims_);
  if (data_.size() != product(dims_)) throw InvalidInput("tensor data length does not match " + shape_string());
  if (!all_finite()) throw InvalidInput("tensor " + shape_string() + " contains a non-finite entry");
}

bool Tensor::all_finite() const {
  for (float v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_string() const {
  std::string s = "(";
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(dims_[i]);
  }
  return s + ")";
}

}  // namespace oareco::nn
