#include "reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ref {

namespace {

double px(const omr::GrayImage& img, int x, int y) { return static_cast<double>(img.at(x, y)); }

double dx(const omr::GrayImage& img, int x, int y) {
  const int w = img.width();
  if (w == 1) return 0.0;
  if (x == 0) return px(img, 1, y) - px(img, 0, y);
  if (x == w - 1) return px(img, w - 1, y) - px(img, w - 2, y);
  return 0.5 * (px(img, x + 1, y) - px(img, x - 1, y));
}

double dy(const omr::GrayImage& img, int x, int y) {
  const int h = img.height();
  if (h == 1) return 0.0;
  if (y == 0) return px(img, x, 1) - px(img, x, 0);
  if (y == h - 1) return px(img, x, h - 1) - px(img, x, h - 2);
  return 0.5 * (px(img, x, y + 1) - px(img, x, y - 1));
}

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

omr::GrayImage gradient_l1(const omr::GrayImage& image) {
  omr::GrayImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      out.at(x, y) = static_cast<float>(std::abs(dx(image, x, y)) + std::abs(dy(image, x, y)));
  return out;
}

std::vector<double> hog_cells(const omr::GrayImage& image, int ox, int oy, int cells_x, int cells_y, int cell,
                              int bins) {
  std::vector<double> out(static_cast<std::size_t>(cells_x) * cells_y * bins, 0.0);
  for (int y = oy; y < oy + cells_y * cell; ++y) {
    for (int x = ox; x < ox + cells_x * cell; ++x) {
      const double gx = dx(image, x, y), gy = dy(image, x, y);
      const double mag = std::hypot(gx, gy);
      if (mag == 0.0) continue;
      double theta = std::atan2(gy, gx);
      while (theta < 0.0) theta += std::numbers::pi;
      while (theta >= std::numbers::pi) theta -= std::numbers::pi;
      int bin = 0;
      while (bin + 1 < bins && theta >= (bin + 1) * std::numbers::pi / bins) ++bin;
      const int cx = (x - ox) / cell, cy = (y - oy) / cell;
      out[(static_cast<std::size_t>(cy) * cells_x + cx) * bins + bin] += mag;
    }
  }
  return out;
}

std::vector<double> hog_summary(const std::vector<double>& full, int bins) {
  auto mean_step = [](const std::vector<double>& s) {
    if (s.size() < 2) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) sum += std::abs(s[i + 1] - s[i]);
    return sum / static_cast<double>(s.size() - 1);
  };
  std::vector<double> out{mean_step(full)};
  for (int b = 0; b < bins; ++b) {
    std::vector<double> series;
    for (std::size_t i = b; i < full.size(); i += bins) series.push_back(full[i]);
    out.push_back(mean_step(series));
  }
  return out;
}

std::array<double, 12> handcrafted(const omr::GrayImage& gray) {
  const omr::GrayImage g = gradient_l1(gray);
  std::vector<double> v;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x) v.push_back(g.at(x, y));
  std::array<double, 12> out{};
  double sum = 0.0;
  for (double e : v) sum += e;
  std::vector<double> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  out[0] = sorted.back();
  out[1] = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  out[2] = sum / static_cast<double>(n);
  const int cells = std::min(gray.width(), gray.height()) >= 216 ? 54 : std::min(gray.width(), gray.height()) / 4;
  const int ox = (gray.width() - cells * 4) / 2, oy = (gray.height() - cells * 4) / 2;
  const auto summary = hog_summary(hog_cells(gray, ox, oy, cells, cells, 4, 8), 8);
  std::copy(summary.begin(), summary.end(), out.begin() + 3);
  return out;
}

std::vector<int> nearest_centers(const std::vector<std::vector<double>>& points,
                                 const std::vector<std::vector<double>>& centers) {
  std::vector<int> out;
  for (const auto& p : points) {
    int best = 0;
    for (std::size_t j = 1; j < centers.size(); ++j)
      if (sq_dist(p, centers[j]) < sq_dist(p, centers[best])) best = static_cast<int>(j);
    out.push_back(best);
  }
  return out;
}

std::vector<double> bovw_histogram(const std::vector<std::vector<double>>& bag,
                                   const std::vector<std::vector<double>>& centers) {
  std::vector<double> h(centers.size(), 0.0);
  if (bag.empty()) return h;
  for (int idx : nearest_centers(bag, centers)) h[idx] += 1.0;
  for (double& e : h) e /= static_cast<double>(bag.size());
  return h;
}

omr::ColorImage warp(const omr::ColorImage& source, const std::array<double, 9>& m, omr::Size out_size) {
  omr::ColorImage out(out_size.w, out_size.h, omr::kWhite);
  const double eps = 1e-9;
  for (int y = 0; y < out_size.h; ++y) {
    for (int x = 0; x < out_size.w; ++x) {
      double sx = m[0] * x + m[1] * y + m[2];
      double sy = m[3] * x + m[4] * y + m[5];
      if (sx < -eps || sy < -eps || sx > source.width() - 1 + eps || sy > source.height() - 1 + eps) continue;
      sx = std::clamp(sx, 0.0, source.width() - 1.0);
      sy = std::clamp(sy, 0.0, source.height() - 1.0);
      const int x0 = std::min(static_cast<int>(sx), source.width() - 1);
      const int y0 = std::min(static_cast<int>(sy), source.height() - 1);
      const int x1 = std::min(x0 + 1, source.width() - 1), y1 = std::min(y0 + 1, source.height() - 1);
      const double fx = sx - x0, fy = sy - y0;
      for (int c = 0; c < 3; ++c) {
        const double top = source.at(x0, y0, c) * (1 - fx) + source.at(x1, y0, c) * fx;
        const double bottom = source.at(x0, y1, c) * (1 - fx) + source.at(x1, y1, c) * fx;
        out.at(x, y, c) = static_cast<float>(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

QuestionOutcome grade_question(const std::vector<omr::AnswerClass>& boxes, int correct_choice, double weight) {
  QuestionOutcome q;
  for (std::size_t k = 0; k < boxes.size(); ++k) {
    if (boxes[k] == omr::AnswerClass::CrossedOut && q.answers == 0) {
      q.answer = static_cast<int>(k);
    } else if (boxes[k] == omr::AnswerClass::Confirmed) {
      q.answer = static_cast<int>(k);
      q.answers = q.answers + 1;
    }
  }
  if (q.answers <= 1 && q.answer.has_value() && *q.answer == correct_choice) q.awarded = weight;
  return q;
}

std::array<double, 3> nbc_posterior(const std::array<double, 3>& prior,
                                    const std::array<std::array<double, 12>, 3>& mean,
                                    const std::array<std::array<double, 12>, 3>& variance,
                                    const std::array<double, 12>& v, int dims) {
  std::array<double, 3> joint{};
  double total = 0.0;
  for (int c = 0; c < 3; ++c) {
    double p = prior[c];
    for (int d = 0; d < dims; ++d) {
      const double var = variance[c][d];
      p *= std::exp(-(v[d] - mean[c][d]) * (v[d] - mean[c][d]) / (2.0 * var)) / std::sqrt(2.0 * std::numbers::pi * var);
    }
    joint[c] = p;
    total += p;
  }
  for (double& p : joint) p /= total;
  return joint;
}

double lloyd_sse(const std::vector<std::vector<double>>& points, int k, unsigned seed, int max_iterations) {
  std::mt19937 rng(seed);
  std::vector<std::vector<double>> centers;
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t i = 0; i < order.size() && static_cast<int>(centers.size()) < k; ++i) {
    const auto& p = points[order[i]];
    if (std::find(centers.begin(), centers.end(), p) == centers.end()) centers.push_back(p);
  }
  std::vector<int> assign;
  for (int it = 0; it < max_iterations; ++it) {
    auto next = nearest_centers(points, centers);
    if (next == assign) break;
    assign = std::move(next);
    std::vector<std::vector<double>> sums(centers.size(), std::vector<double>(points[0].size(), 0.0));
    std::vector<int> counts(centers.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < points[i].size(); ++d) sums[assign[i]][d] += points[i][d];
    }
    for (std::size_t j = 0; j < centers.size(); ++j)
      if (counts[j] > 0)
        for (std::size_t d = 0; d < sums[j].size(); ++d) centers[j][d] = sums[j][d] / counts[j];
  }
  double sse = 0.0;
  for (const auto& p : points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) best = std::min(best, sq_dist(p, c));
    sse += best;
  }
  return sse;
}

}  // namespace ref
