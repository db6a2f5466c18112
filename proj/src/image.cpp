#include "omr/image.hpp"

#include <algorithm>
#include <cmath>

namespace omr {

GrayImage to_gray(const ColorImage& image) {
  GrayImage out(image.width(), image.height());
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>(0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2]);
  }
  return out;
}

ColorImage to_color(const GrayImage& image) {
  ColorImage out(image.width(), image.height());
  auto src = image.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[3 * i] = dst[3 * i + 1] = dst[3 * i + 2] = src[i];
  }
  return out;
}

template <int C>
Image<C> crop(const Image<C>& image, Rect rect, float fill) {
  Image<C> out(rect.w, rect.h, fill);
  for (int y = 0; y < rect.h; ++y) {
    const int sy = rect.y + y;
    if (sy < 0 || sy >= image.height()) continue;
    for (int x = 0; x < rect.w; ++x) {
      const int sx = rect.x + x;
      if (sx < 0 || sx >= image.width()) continue;
      for (int c = 0; c < C; ++c) out.at(x, y, c) = image.at(sx, sy, c);
    }
  }
  return out;
}

template <int C>
bool sample_bilinear(const Image<C>& image, double x, double y, float* out) {
  constexpr double kEps = 1e-9;
  const int w = image.width();
  const int h = image.height();
  if (x < -kEps || y < -kEps || x > w - 1 + kEps || y > h - 1 + kEps) return false;
  x = std::clamp(x, 0.0, static_cast<double>(w - 1));
  y = std::clamp(y, 0.0, static_cast<double>(h - 1));
  const int x0 = std::min(static_cast<int>(x), w - 1);
  const int y0 = std::min(static_cast<int>(y), h - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  for (int c = 0; c < C; ++c) {
    const double top = image.at(x0, y0, c) + fx * (image.at(x1, y0, c) - image.at(x0, y0, c));
    const double bottom = image.at(x0, y1, c) + fx * (image.at(x1, y1, c) - image.at(x0, y1, c));
    out[c] = static_cast<float>(top + fy * (bottom - top));
  }
  return true;
}

template <int C>
Image<C> resize_bilinear(const Image<C>& image, int width, int height) {
  if (image.width() == width && image.height() == height) return image;
  Image<C> out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  float px[C];
  for (int y = 0; y < height; ++y) {
    const double src_y = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    for (int x = 0; x < width; ++x) {
      const double src_x = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      sample_bilinear(image, src_x, src_y, px);
      for (int c = 0; c < C; ++c) out.at(x, y, c) = px[c];
    }
  }
  return out;
}

template <int C>
Image<C> flip_horizontal(const Image<C>& image) {
  Image<C> out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < C; ++c) out.at(x, y, c) = image.at(image.width() - 1 - x, y, c);
  return out;
}

template <int C>
Image<C> flip_vertical(const Image<C>& image) {
  Image<C> out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < C; ++c) out.at(x, y, c) = image.at(x, image.height() - 1 - y, c);
  return out;
}

template <int C>
Image<C> pad(const Image<C>& image, int margin, float fill) {
  return crop(image, Rect{-margin, -margin, image.width() + 2 * margin, image.height() + 2 * margin}, fill);
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

template <int C>
Image<C> blur_impl(const Image<C>& image, double sigma) {
  if (sigma <= 0.0 || image.empty()) return image;
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = image.width();
  const int h = image.height();
  Image<C> tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * image.at(std::clamp(x + i, 0, w - 1), y, c);
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  Image<C> out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        out.at(x, y, c) = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& image, double sigma) { return blur_impl(image, sigma); }
ColorImage gaussian_blur(const ColorImage& image, double sigma) { return blur_impl(image, sigma); }

#define OMR_INSTANTIATE(C)                                                        \
  template Image<C> crop(const Image<C>&, Rect, float);                           \
  template Image<C> resize_bilinear(const Image<C>&, int, int);                   \
  template bool sample_bilinear(const Image<C>&, double, double, float*);         \
  template Image<C> flip_horizontal(const Image<C>&);                             \
  template Image<C> flip_vertical(const Image<C>&);                               \
  template Image<C> pad(const Image<C>&, int, float);

OMR_INSTANTIATE(1)
OMR_INSTANTIATE(3)

#undef OMR_INSTANTIATE

}  // namespace omr
