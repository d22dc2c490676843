#include <doctest.h>

#include <cmath>
#include <random>

#include "../reference/acoustics.hpp"
#include "helpers.hpp"
#include "oareco/error.hpp"
#include "oareco/forward_model.hpp"
#include "oareco/phantom.hpp"

using namespace oareco;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

}  // namespace

TEST_CASE("one pixel, one detector, delay on a sample") {
  ScanGeometry g;
  g.array = {1, 0.003, 1.0, {0, 0}, 0.0};
  g.grid = {1, 1e-4, {0, 0}};
  g.sampling_rate_hz = 1e6;  // 3 mm / 1500 m/s = 2 us = sample 2
  g.num_samples = 8;
  const SparseOperator op = build_forward_operator(g);
  const auto t = op.triplets();
  REQUIRE(t.size() == 1);
  CHECK(t[0].row == 2);
  CHECK(t[0].weight == doctest::Approx(1.0 / 0.003).epsilon(1e-12));
}

TEST_CASE("columns match a direct evaluation of the model") {
  ScanGeometry g = testutil::tiny_geometry();
  g.grid.side_px = 8;
  g.t0_s = 1e-6;
  const SparseOperator op = build_forward_operator(g);
  const ref::Setup s{16, g.array.radius_m, g.array.coverage_rad, g.array.rotation_rad, 0, 0, 8,
                     g.grid.pixel_size_m, 0, 0, g.sampling_rate_hz, g.t0_s, g.sos_m_per_s, g.num_samples};
  for (int j = 0; j < 64; ++j) {
    const auto expected = ref::operator_column(s, j / 8, j % 8);
    const auto column = op.column(static_cast<std::uint32_t>(j));
    REQUIRE(column.size() == expected.size());
    std::size_t i = 0;
    for (const auto& [row, w] : expected) {
      CHECK(column[i].first == static_cast<std::uint64_t>(row));
      // Interpolation fractions round differently; compare against the amplitude scale.
      CHECK(std::abs(column[i].second - w) <= 1e-12 / g.grid.pixel_size_m);
      ++i;
    }
  }
}

TEST_CASE("bracketing weights of each pair sum to the amplitude") {
  const ScanGeometry g = testutil::tiny_geometry();
  const SparseOperator op = build_forward_operator(g);
  const auto det = detector_positions(g.array);
  const auto pix = pixel_coordinates(g.grid);
  for (std::uint32_t j = 0; j < op.cols(); ++j) {
    std::vector<double> per_detector(det.size(), 0.0);
    for (const auto& [row, w] : op.column(j)) {
      CHECK(w >= 0.0);
      per_detector[row / g.num_samples] += w;
    }
    for (std::size_t d = 0; d < det.size(); ++d) {
      const double amp = 1.0 / std::max(distance(pix[j], det[d]), g.grid.pixel_size_m);
      CHECK(std::abs(per_detector[d] - amp) <= 1e-12 * amp);
    }
  }
}

TEST_CASE("adjoint passes the inner-product test") {
  const SparseOperator op = build_forward_operator(desk_scale_geometry());
  std::mt19937_64 rng(17);
  for (int k = 0; k < 20; ++k) {
    const auto x = random_vector(op.cols(), rng);
    const auto y = random_vector(op.rows(), rng);
    const double lhs = dot(op.apply(x), y);
    const double rhs = dot(x, op.apply_adjoint(y));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), std::abs(rhs)));
  }
}

TEST_CASE("forward application is linear and zero maps to zero") {
  const ScanGeometry g = testutil::tiny_geometry();
  const SparseOperator op = build_forward_operator(g);
  const Image zero(g.grid);
  const Sinogram s0 = apply_forward(op, zero);
  CHECK(std::all_of(s0.data().values().begin(), s0.data().values().end(), [](double v) { return v == 0.0; }));
  const Matrix m1 = testutil::random_matrix(12, 12, 1, 0, 1), m2 = testutil::random_matrix(12, 12, 2, 0, 1);
  std::vector<double> sum(144);
  for (int i = 0; i < 144; ++i) sum[i] = m1.values()[i] + m2.values()[i];
  const Sinogram a = apply_forward(op, Image(m1, g.grid));
  const Sinogram b = apply_forward(op, Image(m2, g.grid));
  const Sinogram c = apply_forward(op, Image(Matrix(12, 12, sum), g.grid));
  for (std::size_t i = 0; i < c.data().size(); ++i) {
    CHECK(std::abs(c.data().values()[i] - a.data().values()[i] - b.data().values()[i]) <= 1e-9);
  }
}

TEST_CASE("a point source produces one pulse per detector at its delay") {
  const ScanGeometry g = desk_scale_geometry();
  const SparseOperator op = build_forward_operator(g);
  const PixelIndex p{20, 41};
  const Sinogram s = apply_forward(op, point_phantom(g.grid, {p}));
  const Vec2 r = g.grid.pixel_center(p.row, p.col);
  const auto det = detector_positions(g.array);
  for (int d = 0; d < 64; ++d) {
    const double idx = distance(r, det[d]) / g.sos_m_per_s * g.sampling_rate_hz;
    const auto k = static_cast<std::size_t>(idx);
    for (std::size_t t = 0; t < 512; ++t) {
      if (t == k || t == k + 1) continue;
      CHECK(s.data()(d, t) == 0.0);
    }
    CHECK(s.data()(d, k) + s.data()(d, k + 1) == doctest::Approx(1.0 / distance(r, det[d])).epsilon(1e-12));
  }
}

TEST_CASE("noise model") {
  const ScanGeometry g = desk_scale_geometry();
  const SparseOperator op = build_forward_operator(g);
  const Image img = disk_phantom(g.grid, 3, 4);
  const Sinogram clean = apply_forward(op, img);
  const Sinogram same = simulate_sinogram(img, op, 0.0, 99);
  CHECK(std::equal(clean.data().values().begin(), clean.data().values().end(), same.data().values().begin()));

  const double sigma = 0.3;
  const Sinogram n1 = simulate_sinogram(img, op, sigma, 5);
  const Sinogram n2 = simulate_sinogram(img, op, sigma, 5);
  CHECK(std::equal(n1.data().values().begin(), n1.data().values().end(), n2.data().values().begin()));
  const Sinogram n3 = simulate_sinogram(img, op, sigma, 6);
  CHECK_FALSE(std::equal(n1.data().values().begin(), n1.data().values().end(), n3.data().values().begin()));

  // Pool residuals from several seeds to get well over 1e5 draws.
  std::vector<double> e;
  for (std::uint64_t seed = 100; seed < 104; ++seed) {
    const Sinogram noisy = simulate_sinogram(img, op, sigma, seed);
    for (std::size_t i = 0; i < noisy.data().size(); ++i) e.push_back(noisy.data().values()[i] - clean.data().values()[i]);
  }
  const std::size_t n = e.size();
  REQUIRE(n >= 100000);
  double mean = 0.0, var = 0.0;
  for (double v : e) mean += v;
  mean /= static_cast<double>(n);
  for (double v : e) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n - 1);
  CHECK(std::abs(var - sigma * sigma) <= 0.05 * sigma * sigma);
  CHECK(std::abs(mean) < 5 * sigma / std::sqrt(static_cast<double>(n)));
  CHECK_THROWS_AS(simulate_sinogram(img, op, -1.0, 0), InvalidInput);
}

TEST_CASE("triplet assembly merges duplicates and drops zeros") {
  const SparseOperator op = SparseOperator::from_triplets(3, 2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 1, 0.0}, {2, 1, 4.0}});
  const auto t = op.triplets();
  REQUIRE(t.size() == 2);
  CHECK(t[0].weight == 3.0);
  CHECK(op.apply(std::vector<double>{1.0, 1.0}) == std::vector<double>{3.0, 0.0, 4.0});
  CHECK_THROWS_AS(SparseOperator::from_triplets(3, 2, {{3, 0, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(SparseOperator::from_triplets(3, 2, {{0, 0, -1.0}}), InvalidInput);
}

TEST_CASE("grid mismatch is rejected") {
  const ScanGeometry g = testutil::tiny_geometry();
  const SparseOperator op = build_forward_operator(g);
  ImageGrid other = g.grid;
  other.pixel_size_m *= 2;
  CHECK_THROWS_AS(apply_forward(op, Image(other)), InvalidInput);
}

TEST_CASE("operator products are bit-identical across worker counts") {
  const ScanGeometry g = desk_scale_geometry();
  std::mt19937_64 rng(3);
  const auto x = random_vector(64 * 64, rng);
  const auto y = random_vector(64 * 512, rng);
  std::vector<double> ax, aty;
  {
    testutil::WorkerLimit one(1);
    const SparseOperator op = build_forward_operator(g);
    ax = op.apply(x);
    aty = op.apply_adjoint(y);
  }
  testutil::WorkerLimit four(4);
  const SparseOperator op = build_forward_operator(g);
  CHECK(op.apply(x) == ax);
  CHECK(op.apply_adjoint(y) == aty);
}
