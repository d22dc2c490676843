#include "oareco/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "oareco/error.hpp"

namespace oareco {

double residual_norm(const Image& image, const Sinogram& sino, const SparseOperator& op) {
  if (image.values().size() != op.cols()) {
    throw InvalidInput("image has " + std::to_string(image.values().size()) + " pixels, operator expects " +
                       std::to_string(op.cols()));
  }
  if (sino.data().size() != op.rows()) throw InvalidInput("sinogram size does not match the operator");
  const std::vector<double> ax = op.apply(image.values());
  const std::span<const double> s = sino.data().values();
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = ax[i] - s[i];
    num += d * d;
    den += s[i] * s[i];
  }
  if (den == 0.0) throw InvalidInput("residual norm is undefined for an all-zero sinogram");
  return std::sqrt(num) / std::sqrt(den);
}

std::vector<double> ssim_window() {
  std::vector<double> g(kSsimWindow);
  double sum = 0.0;
  const int half = kSsimWindow / 2;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  std::vector<double> w(kSsimWindow * kSsimWindow);
  for (int i = 0; i < kSsimWindow; ++i) {
    for (int j = 0; j < kSsimWindow; ++j) w[i * kSsimWindow + j] = g[i] * g[j] / (sum * sum);
  }
  return w;
}

double ssim(const Matrix& x, const Matrix& y, double dynamic_range) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw InvalidInput("ssim: image shapes differ");
  if (x.rows() < kSsimWindow || x.cols() < kSsimWindow) {
    throw InvalidInput("ssim: images must be at least 11x11");
  }
  if (!(dynamic_range > 0.0)) throw InvalidInput("ssim: dynamic range must be positive");
  const std::vector<double> w = ssim_window();
  const double c1 = (kSsimK1 * dynamic_range) * (kSsimK1 * dynamic_range);
  const double c2 = (kSsimK2 * dynamic_range) * (kSsimK2 * dynamic_range);
  const std::size_t out_r = x.rows() - kSsimWindow + 1;
  const std::size_t out_c = x.cols() - kSsimWindow + 1;
  double total = 0.0;
  for (std::size_t r = 0; r < out_r; ++r) {
    for (std::size_t c = 0; c < out_c; ++c) {
      double mx = 0.0;
      double my = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) {
        for (int j = 0; j < kSsimWindow; ++j) {
          const double wij = w[i * kSsimWindow + j];
          mx += wij * x(r + i, c + j);
          my += wij * y(r + i, c + j);
        }
      }
      double vx = 0.0;
      double vy = 0.0;
      double cxy = 0.0;
      for (int i = 0; i < kSsimWindow; ++i) {
        for (int j = 0; j < kSsimWindow; ++j) {
          const double wij = w[i * kSsimWindow + j];
          const double dx = x(r + i, c + j) - mx;
          const double dy = y(r + i, c + j) - my;
          vx += wij * (dx * dx);
          vy += wij * (dy * dy);
          cxy += wij * (dx * dy);
        }
      }
      total += ((2.0 * (mx * my) + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / static_cast<double>(out_r * out_c);
}

ImageMetrics image_metrics(const Image& pred, const Image& ref) {
  const Matrix& p = pred.data();
  const Matrix& r = ref.data();
  if (p.rows() != r.rows() || p.cols() != r.cols()) {
    throw InvalidInput("prediction is " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()) +
                       ", reference is " + std::to_string(r.rows()) + "x" + std::to_string(r.cols()));
  }
  const std::span<const double> pv = p.values();
  const std::span<const double> rv = r.values();
  double abs_err = 0.0;
  double sq_err = 0.0;
  double abs_ref = 0.0;
  double sq_ref = 0.0;
  double rmax = -std::numeric_limits<double>::infinity();
  double rmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rv.size(); ++i) {
    const double d = pv[i] - rv[i];
    abs_err += std::abs(d);
    sq_err += d * d;
    abs_ref += std::abs(rv[i]);
    sq_ref += rv[i] * rv[i];
    rmax = std::max(rmax, rv[i]);
    rmin = std::min(rmin, rv[i]);
  }
  if (abs_ref == 0.0) throw InvalidInput("relative metrics are undefined for an all-zero reference");
  const auto n = static_cast<double>(rv.size());
  ImageMetrics m;
  m.mae = abs_err / n;
  m.mae_rel_pct = 100.0 * abs_err / abs_ref;
  m.mse = sq_err / n;
  m.mse_rel_pct = 100.0 * sq_err / sq_ref;
  m.psnr_db = sq_err == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(rmax * rmax / m.mse);
  m.ssim = ssim(p, r, rmax - rmin);
  return m;
}

double percentile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty list");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidInput("percentile fraction must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return v[lo];
  return v[lo] + (v[hi] - v[lo]) * frac;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("cannot aggregate an empty list");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  return {sum / static_cast<double>(v.size()), percentile(v, 0.25), percentile(v, 0.75)};
}

MetricsReport aggregate(const std::vector<ImageMetrics>& per_image) {
  if (per_image.empty()) throw InvalidInput("cannot aggregate an empty list");
  auto collect = [&](auto field) {
    std::vector<double> v;
    v.reserve(per_image.size());
    for (const ImageMetrics& m : per_image) v.push_back(field(m));
    return summarize(v);
  };
  MetricsReport rep;
  rep.count = per_image.size();
  const bool with_r = std::all_of(per_image.begin(), per_image.end(), [](const ImageMetrics& m) { return m.r.has_value(); });
  if (with_r) rep.r = collect([](const ImageMetrics& m) { return *m.r; });
  rep.mae = collect([](const ImageMetrics& m) { return m.mae; });
  rep.mae_rel_pct = collect([](const ImageMetrics& m) { return m.mae_rel_pct; });
  rep.mse = collect([](const ImageMetrics& m) { return m.mse; });
  rep.mse_rel_pct = collect([](const ImageMetrics& m) { return m.mse_rel_pct; });
  rep.psnr_db = collect([](const ImageMetrics& m) { return m.psnr_db; });
  rep.ssim = collect([](const ImageMetrics& m) { return m.ssim; });
  return rep;
}

namespace {

std::string cell(const Summary& s) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.4g [%.4g, %.4g]", s.mean, s.p25, s.p75);
  return buf;
}

}  // namespace

std::string format_metrics_table(const MetricsReport& report, const std::string& label) {
  std::ostringstream os;
  os << "images: " << report.count << "  (mean [p25, p75])\n";
  const std::pair<const char*, std::optional<Summary>> rows[] = {
      {"R", report.r},
      {"MAE", report.mae},
      {"MAE rel %", report.mae_rel_pct},
      {"MSE", report.mse},
      {"MSE rel %", report.mse_rel_pct},
      {"PSNR dB", report.psnr_db},
      {"SSIM", report.ssim},
  };
  char line[160];
  std::snprintf(line, sizeof line, "%-10s  %s\n", "metric", label.c_str());
  os << line;
  for (const auto& [name, s] : rows) {
    std::snprintf(line, sizeof line, "%-10s  %s\n", name, s ? cell(*s).c_str() : "n/a");
    os << line;
  }
  return os.str();
}

void put_metrics(KeyValueMap& kv, const MetricsReport& report) {
  kv.set("count", static_cast<long long>(report.count));
  auto put = [&](const std::string& name, const Summary& s) {
    kv.set(name + ".mean", s.mean);
    kv.set(name + ".p25", s.p25);
    kv.set(name + ".p75", s.p75);
  };
  if (report.r) put("r", *report.r);
  put("mae", report.mae);
  put("mae_rel_pct", report.mae_rel_pct);
  put("mse", report.mse);
  put("mse_rel_pct", report.mse_rel_pct);
  put("psnr_db", report.psnr_db);
  put("ssim", report.ssim);
}

}  // namespace oareco
