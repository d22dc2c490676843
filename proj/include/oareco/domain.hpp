#pragma once

// Geometry and signal containers shared by every module.
//
// Conventions: SI units, x right, y up, angles counter-clockwise from +x.
// Images are stored row-major with row 0 at the minimum y coordinate.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace oareco {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Dense row-major real matrix; entries are checked finite on construction.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Circular-arc transducer array.
struct DetectorArray {
  int num_elements = 0;
  double radius_m = 0.0;
  double coverage_rad = 0.0;
  Vec2 center_xy_m{};
  double rotation_rad = 0.0;  // direction of the arc bisector

  /// Throws InvalidInput when an invariant is violated.
  void validate() const;
};

/// Element positions, uniformly spaced in angle and symmetric about the bisector.
/// A full 2*pi ring is spaced coverage/n so the first and last element do not coincide.
std::vector<Vec2> detector_positions(const DetectorArray& array);

/// Angle of element `index` relative to +x.
double detector_angle(const DetectorArray& array, int index);

/// Square reconstruction grid centred on origin_xy_m.
struct ImageGrid {
  int side_px = 0;
  double pixel_size_m = 0.0;
  Vec2 origin_xy_m{};

  void validate() const;

  std::size_t num_pixels() const noexcept {
    return static_cast<std::size_t>(side_px) * static_cast<std::size_t>(side_px);
  }
  double extent_m() const noexcept { return side_px * pixel_size_m; }

  /// World coordinate of the centre of pixel (row, col).
  Vec2 pixel_center(double row, double col) const noexcept;
  /// Continuous (row, col) index of a world coordinate; inverse of pixel_center.
  Vec2 world_to_index(const Vec2& world) const noexcept;  // x = col, y = row

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;
};

/// Pixel centres as a side_px*side_px row-major list.
std::vector<Vec2> pixel_coordinates(const ImageGrid& grid);

/// Scalar speed of sound with a configurable plausibility window.
class SpeedOfSound {
 public:
  static constexpr double kDefaultMin = 1300.0;
  static constexpr double kDefaultMax = 1700.0;

  explicit SpeedOfSound(double value_m_per_s, double min_allowed = kDefaultMin,
                        double max_allowed = kDefaultMax);

  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Recorded pressure signals, one row per detector element.
class Sinogram {
 public:
  Sinogram(Matrix data, double sampling_rate_hz, double t0_s = 0.0,
           std::optional<double> wavelength_nm = std::nullopt);

  const Matrix& data() const noexcept { return data_; }
  std::size_t num_elements() const noexcept { return data_.rows(); }
  std::size_t num_samples() const noexcept { return data_.cols(); }
  double sampling_rate_hz() const noexcept { return sampling_rate_hz_; }
  double t0_s() const noexcept { return t0_s_; }
  const std::optional<double>& wavelength_nm() const noexcept { return wavelength_nm_; }

  /// Throws InvalidInput unless rows equal the array's element count.
  void check_matches(const DetectorArray& array) const;

 private:
  Matrix data_;
  double sampling_rate_hz_;
  double t0_s_;
  std::optional<double> wavelength_nm_;
};

/// Initial-pressure image on a grid.
class Image {
 public:
  Image(Matrix data, ImageGrid grid);
  explicit Image(const ImageGrid& grid);  // zero image

  const Matrix& data() const noexcept { return data_; }
  const ImageGrid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return data_.values(); }
  double at(std::size_t row, std::size_t col) const { return data_(row, col); }

 private:
  Matrix data_;
  ImageGrid grid_;
};

/// Complete acquisition setup used by simulation and reconstruction.
struct ScanGeometry {
  DetectorArray array;
  ImageGrid grid;
  double sampling_rate_hz = 0.0;
  double t0_s = 0.0;
  int num_samples = 0;
  double sos_m_per_s = 1500.0;

  void validate() const;
};

/// 256 elements, r = 40 mm, 145 degree arc, 40 MHz, 2030 samples, 416 x 416 image.
ScanGeometry full_scale_geometry();
/// 64 elements, 512 samples, 64 x 64 image; used by tests and quick runs.
ScanGeometry desk_scale_geometry();

inline double distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace oareco
