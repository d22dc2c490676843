#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace oareco::nn {

/// Dense row-major float tensor. Activations are (channels, height, width);
/// convolution weights are (out, in / groups, k, k).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> dims);  // zero-filled
  Tensor(std::vector<std::size_t> dims, std::vector<float> data);

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }

  // CHW accessors; valid for rank-3 tensors.
  std::size_t channels() const { return dims_.at(0); }
  std::size_t height() const { return dims_.at(1); }
  std::size_t width() const { return dims_.at(2); }
  std::size_t plane() const { return dims_.at(1) * dims_.at(2); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  float* channel(std::size_t c) { return data_.data() + c * plane(); }
  const float* channel(std::size_t c) const { return data_.data() + c * plane(); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  bool all_finite() const;
  std::string shape_string() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<float> data_;
};

}  // namespace oareco::nn
