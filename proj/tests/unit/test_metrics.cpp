#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../reference/ssim_oracle.hpp"
#include "helpers.hpp"
#include "oareco/error.hpp"
#include "oareco/forward_model.hpp"
#include "oareco/metrics.hpp"
#include "oareco/phantom.hpp"

using namespace oareco;

namespace {

std::vector<double> to_vec(const Matrix& m) { return {m.values().begin(), m.values().end()}; }

Image on_grid(const Matrix& m) { return Image(m, ImageGrid{static_cast<int>(m.rows()), 1e-4, {}}); }

}  // namespace

TEST_CASE("identical images") {
  const Matrix m = testutil::random_matrix(32, 32, 1, 0, 1);
  const ImageMetrics r = image_metrics(on_grid(m), on_grid(m));
  CHECK(r.mae == 0.0);
  CHECK(r.mse == 0.0);
  CHECK(std::isinf(r.psnr_db));
  CHECK(r.psnr_db > 0);
  CHECK(r.ssim == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(r.r.has_value());
}

TEST_CASE("constant offset fixture has 20 dB PSNR") {
  std::vector<double> ref(24 * 24, 0.0), pred(24 * 24);
  ref[5] = 1.0;
  for (std::size_t i = 0; i < ref.size(); ++i) pred[i] = ref[i] + 0.1;
  const ImageMetrics r = image_metrics(on_grid(Matrix(24, 24, pred)), on_grid(Matrix(24, 24, ref)));
  CHECK(r.mse == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(r.mae == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.psnr_db == doctest::Approx(20.0).epsilon(1e-10));
  CHECK(r.mae_rel_pct == doctest::Approx(100.0 * 0.1 * 576 / 1.0).epsilon(1e-10));
  CHECK(r.mse_rel_pct == doctest::Approx(100.0 * 0.01 * 576 / 1.0).epsilon(1e-10));
}

TEST_CASE("SSIM matches the moment-map oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t rows = 11 + seed * 3, cols = 30 - seed;
    const Matrix x = testutil::random_matrix(rows, cols, seed, 0, 1);
    const Matrix y = testutil::random_matrix(rows, cols, seed + 50, 0, 1);
    const double range = 0.7 + 0.1 * static_cast<double>(seed);
    const double got = ssim(x, y, range);
    const double want = ref::ssim(to_vec(x), to_vec(y), static_cast<int>(rows), static_cast<int>(cols), range);
    CHECK(std::abs(got - want) <= 1e-6);
    CHECK(std::abs(got - ssim(y, x, range)) <= 1e-12);
    CHECK(got <= 1.0 + 1e-12);
  }
  double total = 0.0;
  for (double w : ssim_window()) total += w;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(ssim(Matrix(10, 20), Matrix(10, 20), 1.0), InvalidInput);
  CHECK_THROWS_AS(ssim(Matrix(12, 12), Matrix(12, 13), 1.0), InvalidInput);
}

TEST_CASE("metric inequalities on random pairs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix a = testutil::random_matrix(16, 16, seed, 0, 1);
    const Matrix b = testutil::random_matrix(16, 16, seed + 99, -0.5, 1);
    const ImageMetrics m = image_metrics(on_grid(b), on_grid(a));
    CHECK(m.mae <= std::sqrt(m.mse) + 1e-15);
    CHECK(m.mse >= 0.0);
    CHECK(m.ssim <= 1.0);
    CHECK(m.ssim >= -1.0);
  }
}

TEST_CASE("invalid references") {
  const Matrix m = testutil::random_matrix(16, 16, 3);
  CHECK_THROWS_AS(image_metrics(on_grid(m), on_grid(Matrix(16, 16))), InvalidInput);
  CHECK_THROWS_AS(image_metrics(on_grid(m), on_grid(testutil::random_matrix(12, 12, 3))), InvalidInput);
}

TEST_CASE("percentiles and summaries") {
  const std::vector<double> v{4, 1, 3, 2};
  CHECK(percentile(v, 0.25) == 1.75);
  CHECK(percentile(v, 0.75) == 3.25);
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 1.0) == 4.0);
  CHECK(percentile(std::vector<double>{7.0}, 0.3) == 7.0);
  CHECK_THROWS_AS(percentile(std::vector<double>{}, 0.5), InvalidInput);
  CHECK_THROWS_AS(percentile(v, 1.5), InvalidInput);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<double> values(101);
  for (double& x : values) x = u(rng);
  const Summary s = summarize(values);
  for (int k = 0; k < 10; ++k) {
    std::shuffle(values.begin(), values.end(), rng);
    const Summary t = summarize(values);
    CHECK(t.mean == s.mean);
    CHECK(t.p25 == s.p25);
    CHECK(t.p75 == s.p75);
  }
}

TEST_CASE("aggregate carries R only when every image has it") {
  ImageMetrics a, b;
  a.mae = 1;
  b.mae = 3;
  a.r = 0.1;
  b.r = 0.3;
  MetricsReport rep = aggregate({a, b});
  CHECK(rep.count == 2);
  REQUIRE(rep.r.has_value());
  CHECK(rep.r->mean == doctest::Approx(0.2));
  CHECK(rep.mae.mean == 2.0);
  b.r.reset();
  CHECK_FALSE(aggregate({a, b}).r.has_value());
}

TEST_CASE("residual norm") {
  const ScanGeometry g = testutil::tiny_geometry();
  const SparseOperator op = build_forward_operator(g);
  const Image truth = disk_phantom(g.grid, 2, 3);
  const Sinogram s = apply_forward(op, truth);
  CHECK(residual_norm(Image(g.grid), s, op) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(residual_norm(truth, s, op) <= 1e-12);
  std::vector<double> scaled(truth.values().begin(), truth.values().end());
  for (double& v : scaled) v *= 3.0;
  const Sinogram s3 = apply_forward(op, Image(Matrix(12, 12, scaled), g.grid));
  const Image half = disk_phantom(g.grid, 1, 9);
  std::vector<double> h3(half.values().begin(), half.values().end());
  for (double& v : h3) v *= 3.0;
  CHECK(residual_norm(Image(Matrix(12, 12, h3), g.grid), s3, op) ==
        doctest::Approx(residual_norm(half, s, op)).epsilon(1e-12));
  CHECK_THROWS_AS(residual_norm(truth, Sinogram(Matrix(16, 100), g.sampling_rate_hz), op), InvalidInput);
}
