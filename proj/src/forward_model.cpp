#include "oareco/forward_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "oareco/error.hpp"
#include "oareco/oarr.hpp"
#include "oareco/parallel.hpp"

namespace oareco {

SparseOperator SparseOperator::from_triplets(std::uint64_t rows, std::uint32_t cols, std::vector<Triplet> entries,
                                             std::optional<ScanGeometry> provenance) {
  for (const Triplet& t : entries) {
    if (t.row >= rows || t.col >= cols) throw InvalidInput("operator entry outside the matrix shape");
    if (!std::isfinite(t.weight) || t.weight < 0.0) throw InvalidInput("operator weights must be finite and >= 0");
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
  std::vector<Triplet> merged;
  merged.reserve(entries.size());
  for (const Triplet& t : entries) {
    if (!merged.empty() && merged.back().row == t.row && merged.back().col == t.col) {
      merged.back().weight += t.weight;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Triplet& t) { return t.weight == 0.0; });

  SparseOperator op;
  op.rows_ = rows;
  op.cols_ = cols;
  op.provenance_ = std::move(provenance);

  op.csr_ptr_.assign(rows + 1, 0);
  op.csr_col_.reserve(merged.size());
  op.csr_val_.reserve(merged.size());
  for (const Triplet& t : merged) {
    ++op.csr_ptr_[t.row + 1];
    op.csr_col_.push_back(t.col);
    op.csr_val_.push_back(t.weight);
  }
  for (std::uint64_t r = 0; r < rows; ++r) op.csr_ptr_[r + 1] += op.csr_ptr_[r];

  // Counting sort into columns; rows stay ascending within each column.
  op.csc_ptr_.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (const Triplet& t : merged) ++op.csc_ptr_[t.col + 1];
  for (std::uint32_t c = 0; c < cols; ++c) op.csc_ptr_[c + 1] += op.csc_ptr_[c];
  op.csc_row_.resize(merged.size());
  op.csc_val_.resize(merged.size());
  std::vector<std::uint64_t> cursor(op.csc_ptr_.begin(), op.csc_ptr_.end() - 1);
  for (const Triplet& t : merged) {
    const std::uint64_t at = cursor[t.col]++;
    op.csc_row_[at] = t.row;
    op.csc_val_[at] = t.weight;
  }
  return op;
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw InvalidInput("operator apply: vector length mismatch");
  parallel_for(rows_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      double sum = 0.0;
      for (std::uint64_t k = csr_ptr_[r]; k < csr_ptr_[r + 1]; ++k) sum += csr_val_[k] * x[csr_col_[k]];
      y[r] = sum;
    }
  });
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  std::vector<double> y(rows_);
  apply(x, y);
  return y;
}

void SparseOperator::apply_adjoint(std::span<const double> y, std::span<double> x) const {
  if (x.size() != cols_ || y.size() != rows_) throw InvalidInput("operator adjoint: vector length mismatch");
  parallel_for(cols_, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      double sum = 0.0;
      for (std::uint64_t k = csc_ptr_[c]; k < csc_ptr_[c + 1]; ++k) sum += csc_val_[k] * y[csc_row_[k]];
      x[c] = sum;
    }
  });
}

std::vector<double> SparseOperator::apply_adjoint(std::span<const double> y) const {
  std::vector<double> x(cols_);
  apply_adjoint(y, x);
  return x;
}

std::vector<Triplet> SparseOperator::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::uint64_t r = 0; r < rows_; ++r) {
    for (std::uint64_t k = csr_ptr_[r]; k < csr_ptr_[r + 1]; ++k) out.push_back({r, csr_col_[k], csr_val_[k]});
  }
  return out;
}

std::vector<std::pair<std::uint64_t, double>> SparseOperator::column(std::uint32_t col) const {
  if (col >= cols_) throw InvalidInput("column index out of range");
  std::vector<std::pair<std::uint64_t, double>> out;
  for (std::uint64_t k = csc_ptr_[col]; k < csc_ptr_[col + 1]; ++k) out.emplace_back(csc_row_[k], csc_val_[k]);
  return out;
}

SparseOperator build_forward_operator(const ScanGeometry& geometry) {
  geometry.validate();
  const std::vector<Vec2> detectors = detector_positions(geometry.array);
  const std::vector<Vec2> pixels = pixel_coordinates(geometry.grid);
  const double inv_c = 1.0 / geometry.sos_m_per_s;
  const double fs = geometry.sampling_rate_hz;
  const double last_index = geometry.num_samples - 1.0;
  const double min_distance = geometry.grid.pixel_size_m;
  const auto samples = static_cast<std::uint64_t>(geometry.num_samples);

  std::vector<std::vector<Triplet>> per_pixel(pixels.size());
  parallel_for(pixels.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      auto& out = per_pixel[j];
      out.reserve(2 * detectors.size());
      for (std::size_t d = 0; d < detectors.size(); ++d) {
        const double dist = distance(pixels[j], detectors[d]);
        const double idx = (dist * inv_c - geometry.t0_s) * fs;
        if (!(idx >= 0.0 && idx <= last_index)) continue;
        const double weight = 1.0 / std::max(dist, min_distance);
        const auto k = static_cast<std::uint64_t>(idx);
        const double frac = idx - static_cast<double>(k);
        const std::uint64_t row = d * samples + k;
        const auto col = static_cast<std::uint32_t>(j);
        if (frac < 1.0) out.push_back({row, col, (1.0 - frac) * weight});
        if (frac > 0.0) out.push_back({row + 1, col, frac * weight});
      }
    }
  });

  std::size_t total = 0;
  for (const auto& v : per_pixel) total += v.size();
  std::vector<Triplet> entries;
  entries.reserve(total);
  for (auto& v : per_pixel) {
    entries.insert(entries.end(), v.begin(), v.end());
    std::vector<Triplet>().swap(v);
  }
  const std::uint64_t rows = static_cast<std::uint64_t>(geometry.array.num_elements) * samples;
  return SparseOperator::from_triplets(rows, static_cast<std::uint32_t>(pixels.size()), std::move(entries), geometry);
}

namespace {

const ScanGeometry& require_provenance(const SparseOperator& op) {
  if (!op.provenance()) throw InvalidInput("operator has no acquisition geometry attached");
  return *op.provenance();
}

void check_image(const SparseOperator& op, const Image& image) {
  const ScanGeometry& g = require_provenance(op);
  if (!(image.grid() == g.grid)) throw InvalidInput("image grid does not match the operator's grid");
}

Sinogram to_sinogram(const ScanGeometry& g, std::vector<double> data) {
  return Sinogram(Matrix(static_cast<std::size_t>(g.array.num_elements), static_cast<std::size_t>(g.num_samples),
                         std::move(data)),
                  g.sampling_rate_hz, g.t0_s);
}

}  // namespace

Sinogram apply_forward(const SparseOperator& op, const Image& image) {
  check_image(op, image);
  return to_sinogram(*op.provenance(), op.apply(image.values()));
}

Sinogram simulate_sinogram(const Image& image, const SparseOperator& op, double noise_std, std::uint64_t seed) {
  if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw InvalidInput("noise_std must be finite and >= 0");
  check_image(op, image);
  std::vector<double> data = op.apply(image.values());
  if (noise_std > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    for (double& v : data) v += noise(rng);
  }
  return to_sinogram(*op.provenance(), std::move(data));
}

void save_operator(const std::filesystem::path& path, const SparseOperator& op) {
  const std::vector<Triplet> entries = op.triplets();
  const auto n = static_cast<std::uint32_t>(entries.size());
  ArrayRecord rows{"rows", DType::f64, {n}, {}, {}};
  ArrayRecord cols{"cols", DType::f64, {n}, {}, {}};
  ArrayRecord weights{"weights", DType::f64, {n}, {}, {}};
  rows.values.reserve(n);
  cols.values.reserve(n);
  weights.values.reserve(n);
  for (const Triplet& t : entries) {
    rows.values.push_back(static_cast<double>(t.row));
    cols.values.push_back(static_cast<double>(t.col));
    weights.values.push_back(t.weight);
  }
  ArrayRecord shape{"shape", DType::f64, {2}, {static_cast<double>(op.rows()), static_cast<double>(op.cols())}, {}};
  const std::vector<ArrayRecord> records{shape, rows, cols, weights};
  write_archive(path, records);

  KeyValueMap meta;
  meta.set("kind", std::string("forward_operator"));
  if (op.provenance()) put_geometry(meta, *op.provenance());
  meta.save(metadata_path(path));
}

SparseOperator load_operator(const std::filesystem::path& path) {
  const std::vector<ArrayRecord> records = read_archive(path);
  auto find = [&](const char* name) -> const ArrayRecord& {
    for (const ArrayRecord& r : records) {
      if (r.name == name) return r;
    }
    throw ManifestError(name, "missing from operator file");
  };
  const ArrayRecord& shape = find("shape");
  const ArrayRecord& rows = find("rows");
  const ArrayRecord& cols = find("cols");
  const ArrayRecord& weights = find("weights");
  if (shape.values.size() != 2 || rows.values.size() != cols.values.size() ||
      rows.values.size() != weights.values.size()) {
    throw InvalidInput(path.string() + ": inconsistent operator arrays");
  }
  std::vector<Triplet> entries(rows.values.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i] = {static_cast<std::uint64_t>(rows.values[i]), static_cast<std::uint32_t>(cols.values[i]),
                  weights.values[i]};
  }
  std::optional<ScanGeometry> provenance;
  if (std::filesystem::exists(metadata_path(path))) {
    const KeyValueMap meta = KeyValueMap::load(metadata_path(path));
    if (meta.contains("num_elements")) provenance = get_geometry(meta);
  }
  return SparseOperator::from_triplets(static_cast<std::uint64_t>(shape.values[0]),
                                       static_cast<std::uint32_t>(shape.values[1]), std::move(entries), provenance);
}

}  // namespace oareco
