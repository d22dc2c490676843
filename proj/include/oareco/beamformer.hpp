#pragma once

#include <functional>
#include <span>

#include "oareco/domain.hpp"

namespace oareco {

enum class Interpolation { nearest, linear };
enum class ApertureWeighting { uniform };

struct DasConfig {
  Interpolation interpolation = Interpolation::linear;
  ApertureWeighting aperture_weighting = ApertureWeighting::uniform;
  bool normalize_by_count = true;
  /// Optional per-channel filter applied to each detector trace before summation.
  /// Empty by default; no filtering is part of the standard pipeline.
  std::function<void(std::span<double>)> prefilter;
};

/// Delay-and-sum back-projection of `sino` onto `grid`.
///
/// image[p] = w(p) * sum_d s_d(tau_pd), tau_pd = |r_p - r_d| / c - t0, with
/// w(p) = 1 / (number of detectors whose delay falls inside the record) when
/// normalize_by_count is set. Out-of-record delays contribute nothing. The
/// per-pixel sum runs over detectors in ascending order, so the result is
/// bit-identical for any worker count.
Image das_reconstruct(const Sinogram& sino, const DetectorArray& array, const ImageGrid& grid,
                      const SpeedOfSound& sos, const DasConfig& cfg = {});

}  // namespace oareco
