#include "oareco/beamformer.hpp"

#include <cmath>
#include <vector>

#include "oareco/error.hpp"
#include "oareco/parallel.hpp"

namespace oareco {

Image das_reconstruct(const Sinogram& sino, const DetectorArray& array, const ImageGrid& grid,
                      const SpeedOfSound& sos, const DasConfig& cfg) {
  array.validate();
  grid.validate();
  sino.check_matches(array);

  const std::vector<Vec2> detectors = detector_positions(array);
  const std::size_t num_samples = sino.num_samples();
  const double last_index = static_cast<double>(num_samples - 1);
  const double fs = sino.sampling_rate_hz();
  const double t0 = sino.t0_s();
  const double inv_c = 1.0 / sos.value();

  // Filtered copy only when a prefilter is installed.
  Matrix filtered;
  const Matrix* traces = &sino.data();
  if (cfg.prefilter) {
    std::vector<double> data(sino.data().values().begin(), sino.data().values().end());
    for (std::size_t d = 0; d < sino.num_elements(); ++d) {
      cfg.prefilter(std::span<double>(data.data() + d * num_samples, num_samples));
    }
    filtered = Matrix(sino.num_elements(), num_samples, std::move(data));
    traces = &filtered;
  }

  const auto side = static_cast<std::size_t>(grid.side_px);
  std::vector<double> out(grid.num_pixels(), 0.0);
  parallel_for(side, [&](std::size_t row_begin, std::size_t row_end) {
    for (std::size_t row = row_begin; row < row_end; ++row) {
      for (std::size_t col = 0; col < side; ++col) {
        const Vec2 p = grid.pixel_center(static_cast<double>(row), static_cast<double>(col));
        double sum = 0.0;
        int valid = 0;
        for (std::size_t d = 0; d < detectors.size(); ++d) {
          const double idx = (distance(p, detectors[d]) * inv_c - t0) * fs;
          if (!(idx >= 0.0 && idx <= last_index)) continue;
          const std::span<const double> trace = traces->row(d);
          ++valid;
          if (cfg.interpolation == Interpolation::nearest) {
            sum += trace[static_cast<std::size_t>(std::lround(idx))];
          } else {
            const auto k = static_cast<std::size_t>(idx);
            const double frac = idx - static_cast<double>(k);
            sum += frac == 0.0 ? trace[k] : (1.0 - frac) * trace[k] + frac * trace[k + 1];
          }
        }
        if (cfg.normalize_by_count) sum = valid > 0 ? sum / valid : 0.0;
        out[row * side + col] = sum;
      }
    }
  });
  return Image(Matrix(side, side, std::move(out)), grid);
}

}  // namespace oareco
