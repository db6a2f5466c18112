#pragma once

#include <array>
#include <vector>

#include "omr/image.hpp"
#include "omr/local_features.hpp"

namespace omr::draw {

using Color = std::array<float, 3>;

inline constexpr Color kBlack{0.0f, 0.0f, 0.0f};

// Anti-aliased strokes blended over the existing pixels with `opacity`.
void segment(ColorImage& img, Point2 a, Point2 b, double thickness, Color color, double opacity = 1.0);
void polyline(ColorImage& img, const std::vector<Point2>& points, double thickness, Color color,
              double opacity = 1.0, bool closed = false);
void fill_rect(ColorImage& img, Rect r, Color color, double opacity = 1.0);
void rect_outline(ColorImage& img, Rect r, int thickness, Color color);
void fill_ellipse(ColorImage& img, Point2 center, double rx, double ry, Color color, double opacity = 1.0);
void fill_polygon(ColorImage& img, const std::vector<Point2>& points, Color color, double opacity = 1.0);

}  // namespace omr::draw
