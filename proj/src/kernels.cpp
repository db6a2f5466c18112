#include "omr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace omr::kernels {

GrayImage gradient_l1(const GrayImage& image) {
  GrayImage out(image.width(), image.height());
  const int h = image.height();
  const int w = image.width();
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(x, y) = static_cast<float>(std::abs(diff_x(image, x, y)) + std::abs(diff_y(image, x, y)));
    }
  }
  return out;
}

std::vector<double> hog_cells(const GrayImage& image, const HogGeometry& g) {
  std::vector<double> hist(static_cast<std::size_t>(g.cells_x) * g.cells_y * g.bins, 0.0);
  const double bin_width = std::numbers::pi / g.bins;
#pragma omp parallel for schedule(static)
  for (int cy = 0; cy < g.cells_y; ++cy) {
    for (int cx = 0; cx < g.cells_x; ++cx) {
      double* cell = hist.data() + (static_cast<std::size_t>(cy) * g.cells_x + cx) * g.bins;
      for (int j = 0; j < g.cell_size; ++j) {
        const int y = g.origin_y + cy * g.cell_size + j;
        for (int i = 0; i < g.cell_size; ++i) {
          const int x = g.origin_x + cx * g.cell_size + i;
          const double dx = diff_x(image, x, y);
          const double dy = diff_y(image, x, y);
          const double mag = std::sqrt(dx * dx + dy * dy);
          if (mag == 0.0) continue;
          double angle = std::atan2(dy, dx);
          if (angle < 0.0) angle += std::numbers::pi;
          if (angle >= std::numbers::pi) angle -= std::numbers::pi;
          const int bin = std::min(static_cast<int>(angle / bin_width), g.bins - 1);
          cell[bin] += mag;
        }
      }
    }
  }
  return hist;
}

Assignment nearest_centers(std::span<const double> points, std::span<const double> centers, int dim) {
  const auto n = static_cast<std::ptrdiff_t>(points.size() / dim);
  const auto k = static_cast<std::ptrdiff_t>(centers.size() / dim);
  Assignment out;
  out.index.assign(n, -1);
  out.sq_distance.assign(n, std::numeric_limits<double>::infinity());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* p = points.data() + i * dim;
    double best = std::numeric_limits<double>::infinity();
    int best_j = -1;
    for (std::ptrdiff_t j = 0; j < k; ++j) {
      const double* c = centers.data() + j * dim;
      double d = 0.0;
      for (int t = 0; t < dim; ++t) {
        const double e = p[t] - c[t];
        d += e * e;
      }
      if (d < best) {
        best = d;
        best_j = static_cast<int>(j);
      }
    }
    out.index[i] = best_j;
    out.sq_distance[i] = best;
  }
  return out;
}

TwoNearest two_nearest(std::span<const double> queries, std::span<const double> candidates, int dim) {
  const auto n = static_cast<std::ptrdiff_t>(queries.size() / dim);
  const auto m = static_cast<std::ptrdiff_t>(candidates.size() / dim);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  TwoNearest out;
  out.best.assign(n, -1);
  out.best_dist.assign(n, kInf);
  out.second_dist.assign(n, kInf);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double* q = queries.data() + i * dim;
    double d1 = kInf, d2 = kInf;
    int b = -1;
    for (std::ptrdiff_t j = 0; j < m; ++j) {
      const double* c = candidates.data() + j * dim;
      double d = 0.0;
      for (int t = 0; t < dim; ++t) {
        const double e = q[t] - c[t];
        d += e * e;
      }
      if (d < d1) {
        d2 = d1;
        d1 = d;
        b = static_cast<int>(j);
      } else if (d < d2) {
        d2 = d;
      }
    }
    out.best[i] = b;
    out.best_dist[i] = std::sqrt(d1);
    out.second_dist[i] = std::sqrt(d2);
  }
  return out;
}

ColorImage warp_bilinear(const ColorImage& source, const std::array<double, 9>& m, Size out_size, float fill) {
  ColorImage out(out_size.w, out_size.h, fill);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_size.h; ++y) {
    float px[3];
    for (int x = 0; x < out_size.w; ++x) {
      const double sx = m[0] * x + m[1] * y + m[2];
      const double sy = m[3] * x + m[4] * y + m[5];
      if (sample_bilinear(source, sx, sy, px)) {
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = px[c];
      }
    }
  }
  return out;
}

}  // namespace omr::kernels
