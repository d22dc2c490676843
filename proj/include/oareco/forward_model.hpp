#pragma once

// Discretised optoacoustic forward operator.
//
// Each pixel j seen from detector d deposits weight 1/max(|r_j - r_d|, pixel_size)
// into the sinogram row of d, split by linear interpolation between the two
// time bins bracketing tau_jd = |r_j - r_d| / c - t0. Row index = d * num_samples + k,
// column index = row-major pixel index.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "oareco/domain.hpp"

namespace oareco {

struct Triplet {
  std::uint64_t row = 0;
  std::uint32_t col = 0;
  double weight = 0.0;
};

/// Immutable sparse matrix stored twice: compressed rows for A x and
/// compressed columns for A^T y. Both products are computed per output
/// element in a fixed order and are bit-identical for any worker count.
class SparseOperator {
 public:
  /// Duplicate (row, col) entries are summed; zero weights are dropped.
  static SparseOperator from_triplets(std::uint64_t rows, std::uint32_t cols, std::vector<Triplet> entries,
                                      std::optional<ScanGeometry> provenance = std::nullopt);

  std::uint64_t rows() const noexcept { return rows_; }
  std::uint32_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return csr_val_.size(); }
  const std::optional<ScanGeometry>& provenance() const noexcept { return provenance_; }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> apply(std::span<const double> x) const;
  /// x = A^T y
  void apply_adjoint(std::span<const double> y, std::span<double> x) const;
  std::vector<double> apply_adjoint(std::span<const double> y) const;

  /// Entries sorted by (row, col).
  std::vector<Triplet> triplets() const;
  /// Nonzeros of one column as (row, weight), ascending row.
  std::vector<std::pair<std::uint64_t, double>> column(std::uint32_t col) const;

 private:
  SparseOperator() = default;

  std::uint64_t rows_ = 0;
  std::uint32_t cols_ = 0;
  std::vector<std::uint64_t> csr_ptr_;
  std::vector<std::uint32_t> csr_col_;
  std::vector<double> csr_val_;
  std::vector<std::uint64_t> csc_ptr_;
  std::vector<std::uint64_t> csc_row_;
  std::vector<double> csc_val_;
  std::optional<ScanGeometry> provenance_;
};

SparseOperator build_forward_operator(const ScanGeometry& geometry);

/// s = A vec(x). Throws InvalidInput when the image grid differs from the operator's.
Sinogram apply_forward(const SparseOperator& op, const Image& image);

/// A vec(x) plus i.i.d. N(0, noise_std^2) noise from a seeded generator.
Sinogram simulate_sinogram(const Image& image, const SparseOperator& op, double noise_std, std::uint64_t seed);

void save_operator(const std::filesystem::path& path, const SparseOperator& op);
SparseOperator load_operator(const std::filesystem::path& path);

}  // namespace oareco
