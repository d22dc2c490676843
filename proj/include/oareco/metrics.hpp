#pragma once

// Image-quality metrics.
//
// R = ||A x - s|| / ||s||. MAE, MSE and their relative forms are taken over
// all pixels; PSNR uses the reference maximum as peak and is +inf when the
// images are identical. SSIM uses an 11x11 Gaussian window (sigma 1.5),
// k1 = 0.01, k2 = 0.03, L = max(ref) - min(ref), averaged over the windows
// that fit entirely inside the image.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oareco/domain.hpp"
#include "oareco/forward_model.hpp"
#include "oareco/keyvalue.hpp"

namespace oareco {

double residual_norm(const Image& image, const Sinogram& sino, const SparseOperator& op);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Normalized 11x11 Gaussian window, row-major.
std::vector<double> ssim_window();

/// Mean SSIM for a fixed dynamic range. Symmetric in x and y.
double ssim(const Matrix& x, const Matrix& y, double dynamic_range);

struct ImageMetrics {
  std::optional<double> r;  // present when a forward operator was supplied
  double mae = 0.0;
  double mae_rel_pct = 0.0;
  double mse = 0.0;
  double mse_rel_pct = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
};

ImageMetrics image_metrics(const Image& pred, const Image& ref);

/// Linear interpolation between order statistics at position (n - 1) q.
double percentile(std::span<const double> values, double q);

struct Summary {
  double mean = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
};

/// Mean is summed in sorted order so the result does not depend on input order.
Summary summarize(std::span<const double> values);

struct MetricsReport {
  std::size_t count = 0;
  std::optional<Summary> r;
  Summary mae, mae_rel_pct, mse, mse_rel_pct, psnr_db, ssim;
};

MetricsReport aggregate(const std::vector<ImageMetrics>& per_image);

std::string format_metrics_table(const MetricsReport& report, const std::string& label);
void put_metrics(KeyValueMap& kv, const MetricsReport& report);

}  // namespace oareco
