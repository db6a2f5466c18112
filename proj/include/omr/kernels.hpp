#pragma once

// Data-parallel inner loops shared by the pipeline. Each kernel has a serial
// counterpart in tests/reference used for oracle tests and benchmarking.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "omr/image.hpp"

namespace omr::kernels {

// Central differences in the interior, one-sided at the borders.
inline double diff_x(const GrayImage& img, int x, int y) {
  const int w = img.width();
  if (w < 2) return 0.0;
  if (x == 0) return static_cast<double>(img.at(1, y)) - img.at(0, y);
  if (x == w - 1) return static_cast<double>(img.at(w - 1, y)) - img.at(w - 2, y);
  return 0.5 * (static_cast<double>(img.at(x + 1, y)) - img.at(x - 1, y));
}

inline double diff_y(const GrayImage& img, int x, int y) {
  const int h = img.height();
  if (h < 2) return 0.0;
  if (y == 0) return static_cast<double>(img.at(x, 1)) - img.at(x, 0);
  if (y == h - 1) return static_cast<double>(img.at(x, h - 1)) - img.at(x, h - 2);
  return 0.5 * (static_cast<double>(img.at(x, y + 1)) - img.at(x, y - 1));
}

// |d/dx| + |d/dy| per pixel.
GrayImage gradient_l1(const GrayImage& image);

struct HogGeometry {
  int origin_x = 0;
  int origin_y = 0;
  int cells_x = 0;
  int cells_y = 0;
  int cell_size = 4;
  int bins = 8;
};

// Unsigned-orientation cell histograms with hard binning of the Euclidean
// gradient magnitude. Layout: ((cell_row * cells_x + cell_col) * bins + bin).
std::vector<double> hog_cells(const GrayImage& image, const HogGeometry& geometry);

struct Assignment {
  std::vector<int> index;
  std::vector<double> sq_distance;
};

// Nearest center (lowest index on ties) for each row of `points` (row-major, `dim` columns).
Assignment nearest_centers(std::span<const double> points, std::span<const double> centers, int dim);

struct TwoNearest {
  std::vector<int> best;
  std::vector<double> best_dist;    // Euclidean
  std::vector<double> second_dist;  // Euclidean, +inf when only one candidate
};

TwoNearest two_nearest(std::span<const double> queries, std::span<const double> candidates, int dim);

// Output pixel p samples the source at inverse * p (row-major 3x3, affine).
// Samples falling outside the source take `fill`.
ColorImage warp_bilinear(const ColorImage& source, const std::array<double, 9>& inverse, Size out_size,
                         float fill);

}  // namespace omr::kernels
