#include "oareco/domain.hpp"

#include <numbers>
#include <string>

#include "oareco/error.hpp"

namespace oareco {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + " contains a non-finite entry");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "matrix data length does not match its shape");
  require_finite(data_, "matrix");
}

void DetectorArray::validate() const {
  require(num_elements >= 1, "detector array needs at least one element");
  require(std::isfinite(radius_m) && radius_m > 0.0, "detector radius must be positive");
  require(coverage_rad > 0.0 && coverage_rad <= 2.0 * std::numbers::pi,
          "detector coverage must lie in (0, 2*pi]");
  require(std::isfinite(center_xy_m.x) && std::isfinite(center_xy_m.y) && std::isfinite(rotation_rad),
          "detector centre and rotation must be finite");
}

double detector_angle(const DetectorArray& array, int index) {
  if (array.num_elements == 1) return array.rotation_rad;
  const bool full_ring = array.coverage_rad >= 2.0 * std::numbers::pi;
  const double step = full_ring ? array.coverage_rad / array.num_elements
                                : array.coverage_rad / (array.num_elements - 1);
  const double first = -0.5 * step * (array.num_elements - 1);
  return array.rotation_rad + first + step * index;
}

std::vector<Vec2> detector_positions(const DetectorArray& array) {
  array.validate();
  std::vector<Vec2> out;
  out.reserve(static_cast<std::size_t>(array.num_elements));
  for (int i = 0; i < array.num_elements; ++i) {
    const double angle = detector_angle(array, i);
    out.push_back({array.center_xy_m.x + array.radius_m * std::cos(angle),
                   array.center_xy_m.y + array.radius_m * std::sin(angle)});
  }
  return out;
}

void ImageGrid::validate() const {
  require(side_px >= 1, "grid side must be a positive pixel count");
  require(std::isfinite(pixel_size_m) && pixel_size_m > 0.0, "pixel size must be positive");
  require(std::isfinite(origin_xy_m.x) && std::isfinite(origin_xy_m.y), "grid origin must be finite");
}

Vec2 ImageGrid::pixel_center(double row, double col) const noexcept {
  const double half = 0.5 * (side_px - 1);
  return {origin_xy_m.x + (col - half) * pixel_size_m, origin_xy_m.y + (row - half) * pixel_size_m};
}

Vec2 ImageGrid::world_to_index(const Vec2& world) const noexcept {
  const double half = 0.5 * (side_px - 1);
  return {(world.x - origin_xy_m.x) / pixel_size_m + half, (world.y - origin_xy_m.y) / pixel_size_m + half};
}

std::vector<Vec2> pixel_coordinates(const ImageGrid& grid) {
  grid.validate();
  std::vector<Vec2> out;
  out.reserve(grid.num_pixels());
  for (int r = 0; r < grid.side_px; ++r) {
    for (int c = 0; c < grid.side_px; ++c) out.push_back(grid.pixel_center(r, c));
  }
  return out;
}

SpeedOfSound::SpeedOfSound(double value_m_per_s, double min_allowed, double max_allowed) : value_(value_m_per_s) {
  require(std::isfinite(value_m_per_s) && value_m_per_s > 0.0, "speed of sound must be positive");
  require(value_m_per_s >= min_allowed && value_m_per_s <= max_allowed,
          "speed of sound " + std::to_string(value_m_per_s) + " m/s outside [" + std::to_string(min_allowed) +
              ", " + std::to_string(max_allowed) + "]");
}

Sinogram::Sinogram(Matrix data, double sampling_rate_hz, double t0_s, std::optional<double> wavelength_nm)
    : data_(std::move(data)), sampling_rate_hz_(sampling_rate_hz), t0_s_(t0_s), wavelength_nm_(wavelength_nm) {
  require(std::isfinite(sampling_rate_hz) && sampling_rate_hz > 0.0, "sampling rate must be positive");
  require(std::isfinite(t0_s), "t0 must be finite");
  require(data_.rows() > 0 && data_.cols() > 0, "sinogram must not be empty");
  require(!wavelength_nm_ || std::isfinite(*wavelength_nm_), "wavelength must be finite");
}

void Sinogram::check_matches(const DetectorArray& array) const {
  require(num_elements() == static_cast<std::size_t>(array.num_elements),
          "sinogram has " + std::to_string(num_elements()) + " rows but the detector array has " +
              std::to_string(array.num_elements) + " elements");
}

Image::Image(Matrix data, ImageGrid grid) : data_(std::move(data)), grid_(grid) {
  grid_.validate();
  require(data_.rows() == static_cast<std::size_t>(grid_.side_px) && data_.cols() == data_.rows(),
          "image shape does not match its grid");
}

Image::Image(const ImageGrid& grid) : Image(Matrix(grid.side_px, grid.side_px), grid) {}

void ScanGeometry::validate() const {
  array.validate();
  grid.validate();
  require(std::isfinite(sampling_rate_hz) && sampling_rate_hz > 0.0, "sampling rate must be positive");
  require(std::isfinite(t0_s), "t0 must be finite");
  require(num_samples >= 1, "sample count must be positive");
  SpeedOfSound{sos_m_per_s};
}

ScanGeometry full_scale_geometry() {
  ScanGeometry g;
  g.array = {256, 0.04, 145.0 * std::numbers::pi / 180.0, {0.0, 0.0}, -0.5 * std::numbers::pi};
  g.grid = {416, 1e-4, {0.0, 0.0}};
  g.sampling_rate_hz = 40e6;
  g.t0_s = 0.0;
  g.num_samples = 2030;
  g.sos_m_per_s = 1500.0;
  return g;
}

ScanGeometry desk_scale_geometry() {
  ScanGeometry g;
  g.array = {64, 0.02, 145.0 * std::numbers::pi / 180.0, {0.0, 0.0}, -0.5 * std::numbers::pi};
  g.grid = {64, 2.5e-4, {0.0, 0.0}};
  g.sampling_rate_hz = 20e6;
  g.t0_s = 0.0;
  g.num_samples = 512;
  g.sos_m_per_s = 1500.0;
  return g;
}

}  // namespace oareco
