#include "oareco/phantom.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "oareco/error.hpp"

namespace oareco {

Image point_phantom(const ImageGrid& grid, const std::vector<PixelIndex>& points) {
  grid.validate();
  const auto side = static_cast<std::size_t>(grid.side_px);
  std::vector<double> v(side * side, 0.0);
  for (const PixelIndex& p : points) {
    if (p.row < 0 || p.col < 0 || p.row >= grid.side_px || p.col >= grid.side_px) {
      throw InvalidInput("point (" + std::to_string(p.row) + ", " + std::to_string(p.col) + ") is outside the grid");
    }
    v[static_cast<std::size_t>(p.row) * side + static_cast<std::size_t>(p.col)] = 1.0;
  }
  return Image(Matrix(side, side, std::move(v)), grid);
}

std::vector<PixelIndex> random_pixels(const ImageGrid& grid, int count, std::uint64_t seed, int margin) {
  grid.validate();
  const int span = grid.side_px - 2 * margin;
  if (count < 0 || margin < 0 || span < 1 || static_cast<long long>(span) * span < count) {
    throw InvalidInput("cannot place " + std::to_string(count) + " points with margin " + std::to_string(margin));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(margin, margin + span - 1);
  std::set<std::pair<int, int>> seen;
  std::vector<PixelIndex> out;
  while (static_cast<int>(out.size()) < count) {
    const int r = pick(rng);
    const int c = pick(rng);
    if (seen.insert({r, c}).second) out.push_back({r, c});
  }
  return out;
}

Image disk_phantom(const ImageGrid& grid, int count, std::uint64_t seed) {
  grid.validate();
  if (count < 1) throw InvalidInput("disk count must be positive");
  const auto side = static_cast<std::size_t>(grid.side_px);
  const double extent = grid.extent_m();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(side * side, 0.0);
  for (int k = 0; k < count; ++k) {
    const double radius = extent * (0.03 + 0.07 * unit(rng));
    const double reach = 0.4 * extent - radius;
    const Vec2 centre{grid.origin_xy_m.x + reach * (2.0 * unit(rng) - 1.0),
                      grid.origin_xy_m.y + reach * (2.0 * unit(rng) - 1.0)};
    const double amp = 1.0 - 0.7 * unit(rng);
    for (std::size_t r = 0; r < side; ++r) {
      for (std::size_t c = 0; c < side; ++c) {
        const Vec2 p = grid.pixel_center(static_cast<double>(r), static_cast<double>(c));
        if (distance(p, centre) <= radius) v[r * side + c] += amp;
      }
    }
  }
  return Image(Matrix(side, side, std::move(v)), grid);
}

namespace {

std::string next_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string rest;
      std::getline(in, rest);
      if (!tok.empty()) break;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(ch);
  }
  return tok;
}

int parse_header_int(std::istream& in, const std::string& what) {
  const std::string tok = next_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used == tok.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput("PGM: bad " + what + " '" + tok + "'");
}

}  // namespace

Matrix load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open image " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P2" && magic != "P5") throw InvalidInput(path.string() + ": only PGM (P2/P5) images are supported");
  const int w = parse_header_int(in, "width");
  const int h = parse_header_int(in, "height");
  const int maxval = parse_header_int(in, "maxval");
  if (maxval > 65535) throw InvalidInput("PGM: maxval out of range");
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<double> v(n);
  if (magic == "P5") {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> raw(n * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw InvalidInput("PGM: truncated pixel data");
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned value = bytes == 1 ? raw[i] : (static_cast<unsigned>(raw[2 * i]) << 8) | raw[2 * i + 1];
      v[i] = static_cast<double>(value) / maxval;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const std::string tok = next_token(in);
      if (tok.empty()) throw InvalidInput("PGM: truncated pixel data");
      v[i] = std::stod(tok) / maxval;
    }
  }
  for (double x : v) {
    if (x < 0.0 || x > 1.0) throw InvalidInput("PGM: sample exceeds maxval");
  }
  return Matrix(static_cast<std::size_t>(h), static_cast<std::size_t>(w), std::move(v));
}

void save_pgm(const std::filesystem::path& path, const Matrix& image) {
  const auto values = image.values();
  if (values.empty()) throw InvalidInput("cannot save an empty image");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double range = *hi - *lo;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (double v : values) {
    const double t = range > 0.0 ? (v - *lo) / range : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(t * 255.0))));
  }
}

Matrix resize_bilinear(const Matrix& src, std::size_t rows, std::size_t cols) {
  if (src.size() == 0 || rows == 0 || cols == 0) throw InvalidInput("resize: empty image");
  std::vector<double> out(rows * cols);
  const double sy = static_cast<double>(src.rows()) / static_cast<double>(rows);
  const double sx = static_cast<double>(src.cols()) / static_cast<double>(cols);
  auto coord = [](std::size_t i, double scale, std::size_t n, std::size_t& i0, std::size_t& i1, double& f) {
    double p = (static_cast<double>(i) + 0.5) * scale - 0.5;
    p = std::clamp(p, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<std::size_t>(std::floor(p));
    i1 = std::min(i0 + 1, n - 1);
    f = p - static_cast<double>(i0);
  };
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t r0, r1;
    double fr;
    coord(r, sy, src.rows(), r0, r1, fr);
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t c0, c1;
      double fc;
      coord(c, sx, src.cols(), c0, c1, fc);
      const double top = src(r0, c0) * (1.0 - fc) + src(r0, c1) * fc;
      const double bottom = src(r1, c0) * (1.0 - fc) + src(r1, c1) * fc;
      out[r * cols + c] = top * (1.0 - fr) + bottom * fr;
    }
  }
  return Matrix(rows, cols, std::move(out));
}

Image image_phantom(const ImageGrid& grid, const std::filesystem::path& path) {
  grid.validate();
  const auto side = static_cast<std::size_t>(grid.side_px);
  const Matrix resized = resize_bilinear(load_pgm(path), side, side);
  double peak = 0.0;
  for (double v : resized.values()) peak = std::max(peak, v);
  std::vector<double> v(side * side, 0.0);
  for (std::size_t r = 0; r < side; ++r) {
    for (std::size_t c = 0; c < side; ++c) {
      const double x = peak > 0.0 ? resized(side - 1 - r, c) / peak : 0.0;
      v[r * side + c] = std::max(x, 0.0);
    }
  }
  return Image(Matrix(side, side, std::move(v)), grid);
}

Image make_phantom(const std::string& spec, const ImageGrid& grid, int count, std::uint64_t seed) {
  if (spec == "points") {
    const int margin = std::max(1, grid.side_px / 8);
    return point_phantom(grid, random_pixels(grid, count, seed, margin));
  }
  if (spec == "disks") return disk_phantom(grid, count, seed);
  if (spec.rfind("image:", 0) == 0) return image_phantom(grid, spec.substr(6));
  throw InvalidInput("unknown phantom '" + spec + "' (expected points, disks or image:<path>)");
}

}  // namespace oareco
