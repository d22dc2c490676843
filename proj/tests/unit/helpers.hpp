#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oareco/domain.hpp"
#include "oareco/parallel.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("oareco_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// 16 elements on a 270 degree arc of radius 10 mm, 12 x 12 grid of 0.5 mm,
/// 10 MHz, 100 samples. Every pixel-detector delay lies inside the record.
inline oareco::ScanGeometry tiny_geometry() {
  oareco::ScanGeometry g;
  g.array.num_elements = 16;
  g.array.radius_m = 0.01;
  g.array.coverage_rad = 1.5 * 3.141592653589793;
  g.array.rotation_rad = -0.5 * 3.141592653589793;
  g.grid.side_px = 12;
  g.grid.pixel_size_m = 0.5e-3;
  g.sampling_rate_hz = 10e6;
  g.num_samples = 100;
  g.sos_m_per_s = 1500.0;
  return g;
}

inline oareco::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = -1.0,
                                    double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(rows * cols);
  for (double& x : v) x = u(rng);
  return oareco::Matrix(rows, cols, std::move(v));
}

/// Restores the default worker count when leaving scope.
struct WorkerLimit {
  explicit WorkerLimit(std::size_t n) { oareco::set_worker_limit(n); }
  ~WorkerLimit() { oareco::set_worker_limit(std::nullopt); }
};

}  // namespace testutil
