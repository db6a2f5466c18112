#include "omr/draw.hpp"

#include <algorithm>
#include <cmath>

namespace omr::draw {

namespace {

void blend(ColorImage& img, int x, int y, const Color& color, double alpha) {
  if (x < 0 || y < 0 || x >= img.width() || y >= img.height() || alpha <= 0.0) return;
  alpha = std::min(alpha, 1.0);
  for (int c = 0; c < 3; ++c) {
    float& p = img.at(x, y, c);
    p = static_cast<float>(p * (1.0 - alpha) + color[c] * alpha);
  }
}

double segment_distance(double px, double py, Point2 a, Point2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

}  // namespace

void segment(ColorImage& img, Point2 a, Point2 b, double thickness, Color color, double opacity) {
  const double r = thickness / 2.0 + 1.0;
  const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - r));
  const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + r));
  const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - r));
  const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + r));
  for (int y = std::max(y0, 0); y <= std::min(y1, img.height() - 1); ++y) {
    for (int x = std::max(x0, 0); x <= std::min(x1, img.width() - 1); ++x) {
      const double d = segment_distance(x, y, a, b);
      const double coverage = std::clamp(thickness / 2.0 + 0.5 - d, 0.0, 1.0);
      blend(img, x, y, color, coverage * opacity);
    }
  }
}

void polyline(ColorImage& img, const std::vector<Point2>& points, double thickness, Color color, double opacity,
              bool closed) {
  for (std::size_t i = 0; i + 1 < points.size(); ++i) segment(img, points[i], points[i + 1], thickness, color, opacity);
  if (closed && points.size() > 2) segment(img, points.back(), points.front(), thickness, color, opacity);
}

void fill_rect(ColorImage& img, Rect r, Color color, double opacity) {
  for (int y = std::max(r.y, 0); y < std::min(r.y + r.h, img.height()); ++y)
    for (int x = std::max(r.x, 0); x < std::min(r.x + r.w, img.width()); ++x) blend(img, x, y, color, opacity);
}

void rect_outline(ColorImage& img, Rect r, int t, Color color) {
  fill_rect(img, {r.x, r.y, r.w, t}, color);
  fill_rect(img, {r.x, r.y + r.h - t, r.w, t}, color);
  fill_rect(img, {r.x, r.y + t, t, r.h - 2 * t}, color);
  fill_rect(img, {r.x + r.w - t, r.y + t, t, r.h - 2 * t}, color);
}

void fill_ellipse(ColorImage& img, Point2 c, double rx, double ry, Color color, double opacity) {
  for (int y = static_cast<int>(c.y - ry - 1); y <= static_cast<int>(c.y + ry + 1); ++y) {
    for (int x = static_cast<int>(c.x - rx - 1); x <= static_cast<int>(c.x + rx + 1); ++x) {
      const double nx = (x - c.x) / rx, ny = (y - c.y) / ry;
      const double edge = (1.0 - std::sqrt(nx * nx + ny * ny)) * std::min(rx, ry) + 0.5;
      blend(img, x, y, color, std::clamp(edge, 0.0, 1.0) * opacity);
    }
  }
}

void fill_polygon(ColorImage& img, const std::vector<Point2>& pts, Color color, double opacity) {
  if (pts.size() < 3) return;
  double ymin = pts[0].y, ymax = pts[0].y, xmin = pts[0].x, xmax = pts[0].x;
  for (const auto& p : pts) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
  }
  for (int y = static_cast<int>(std::floor(ymin)); y <= static_cast<int>(std::ceil(ymax)); ++y) {
    for (int x = static_cast<int>(std::floor(xmin)); x <= static_cast<int>(std::ceil(xmax)); ++x) {
      bool inside = false;
      for (std::size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
        if ((pts[i].y > y) != (pts[j].y > y) &&
            x < (pts[j].x - pts[i].x) * (y - pts[i].y) / (pts[j].y - pts[i].y) + pts[i].x) {
          inside = !inside;
        }
      }
      if (inside) blend(img, x, y, color, opacity);
    }
  }
}

}  // namespace omr::draw
