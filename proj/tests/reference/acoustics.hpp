#pragma once

// Independent evaluations of the delay-and-sum value of one pixel and of one
// forward-operator column, written against the definitions directly.

#include <cmath>
#include <map>
#include <vector>

namespace ref {

struct Setup {
  int n_det;
  double radius, coverage, rotation, cx, cy;
  int side;
  double pixel, ox, oy;
  double fs, t0, c;
  int samples;
};

inline void detector(const Setup& s, int d, double& x, double& y) {
  const double step = s.n_det > 1 ? s.coverage / (s.n_det - 1) : 0.0;
  const double a = s.rotation - s.coverage / 2 + d * step;
  x = s.cx + s.radius * std::cos(a);
  y = s.cy + s.radius * std::sin(a);
}

inline void pixel(const Setup& s, int row, int col, double& x, double& y) {
  x = s.ox + (col - (s.side - 1) / 2.0) * s.pixel;
  y = s.oy + (row - (s.side - 1) / 2.0) * s.pixel;
}

/// Linear-interpolated delay-and-sum averaged over detectors with in-record delays.
inline double das_pixel(const Setup& s, const std::vector<std::vector<double>>& sino, int row, int col) {
  double px, py;
  pixel(s, row, col, px, py);
  double sum = 0.0;
  int used = 0;
  for (int d = 0; d < s.n_det; ++d) {
    double dx, dy;
    detector(s, d, dx, dy);
    const double idx = (std::hypot(px - dx, py - dy) / s.c - s.t0) * s.fs;
    if (idx < 0 || idx > s.samples - 1) continue;
    const int k = static_cast<int>(std::floor(idx));
    const double f = idx - k;
    sum += f == 0.0 ? sino[d][k] : (1 - f) * sino[d][k] + f * sino[d][k + 1];
    ++used;
  }
  return used ? sum / used : 0.0;
}

/// Column of the forward operator for one pixel: row -> weight.
inline std::map<long, double> operator_column(const Setup& s, int row, int col) {
  double px, py;
  pixel(s, row, col, px, py);
  std::map<long, double> out;
  for (int d = 0; d < s.n_det; ++d) {
    double dx, dy;
    detector(s, d, dx, dy);
    const double dist = std::hypot(px - dx, py - dy);
    const double idx = (dist / s.c - s.t0) * s.fs;
    if (idx < 0 || idx > s.samples - 1) continue;
    const double amp = 1.0 / std::max(dist, s.pixel);
    const int k = static_cast<int>(std::floor(idx));
    const double f = idx - k;
    out[static_cast<long>(d) * s.samples + k] += (1 - f) * amp;
    if (f > 0) out[static_cast<long>(d) * s.samples + k + 1] += f * amp;
  }
  for (auto it = out.begin(); it != out.end();) it = it->second == 0.0 ? out.erase(it) : std::next(it);
  return out;
}

}  // namespace ref
