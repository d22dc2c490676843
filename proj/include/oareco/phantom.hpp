#pragma once

// Synthetic initial-pressure images for simulation.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "oareco/domain.hpp"

namespace oareco {

struct PixelIndex {
  int row = 0;
  int col = 0;
};

/// Unit-amplitude single pixels.
Image point_phantom(const ImageGrid& grid, const std::vector<PixelIndex>& points);

/// `count` distinct pixels at least `margin` pixels from the border.
std::vector<PixelIndex> random_pixels(const ImageGrid& grid, int count, std::uint64_t seed, int margin);

/// Sum of `count` uniform disks with random centres, radii and amplitudes in
/// (0.3, 1], all inside the central 80% of the grid.
Image disk_phantom(const ImageGrid& grid, int count, std::uint64_t seed);

/// Grayscale PGM (P2 or P5, 8 or 16 bit) scaled to [0, 1].
Matrix load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const Matrix& image);  // P5 8-bit, min..max stretched

/// Bilinear resize with half-pixel centres.
Matrix resize_bilinear(const Matrix& src, std::size_t rows, std::size_t cols);

/// Image file resized to the grid and normalized to a peak of 1. File row 0
/// is the top of the picture, which maps to the maximum-y image row.
Image image_phantom(const ImageGrid& grid, const std::filesystem::path& path);

/// "points", "disks" or "image:<path>".
Image make_phantom(const std::string& spec, const ImageGrid& grid, int count, std::uint64_t seed);

}  // namespace oareco
