#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace omr {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Size {
  int w = 0;
  int h = 0;

  friend bool operator==(const Size&, const Size&) = default;
};

inline constexpr float kWhite = 255.0f;

// Row-major interleaved raster with intensities on the 0..255 scale.
template <int Channels>
class Image {
 public:
  static constexpr int kChannels = Channels;

  Image() = default;
  Image(int width, int height, float fill = 0.0f)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height * Channels, fill) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Size size() const noexcept { return {width_, height_}; }
  bool empty() const noexcept { return width_ <= 0 || height_ <= 0; }

  float& at(int x, int y, int c = 0) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }
  float at(int x, int y, int c = 0) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * Channels + c];
  }

  std::span<float> data() noexcept { return pixels_; }
  std::span<const float> data() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

using GrayImage = Image<1>;
using ColorImage = Image<3>;

// Luma conversion with weights 0.299 / 0.587 / 0.114.
GrayImage to_gray(const ColorImage& image);
ColorImage to_color(const GrayImage& image);

// Crops `rect`; pixels outside the source are filled with `fill`.
template <int C>
Image<C> crop(const Image<C>& image, Rect rect, float fill = kWhite);

// Bilinear resampling with pixel-center alignment. Same-size resizing is exact.
template <int C>
Image<C> resize_bilinear(const Image<C>& image, int width, int height);

// Bilinear sample at (x, y); returns false when the point lies outside [0, w-1] x [0, h-1].
template <int C>
bool sample_bilinear(const Image<C>& image, double x, double y, float* out);

template <int C>
Image<C> flip_horizontal(const Image<C>& image);
template <int C>
Image<C> flip_vertical(const Image<C>& image);

// Separable Gaussian blur with replicated borders; sigma <= 0 returns a copy.
GrayImage gaussian_blur(const GrayImage& image, double sigma);
ColorImage gaussian_blur(const ColorImage& image, double sigma);

// Pads every side by `margin` pixels of `fill`.
template <int C>
Image<C> pad(const Image<C>& image, int margin, float fill = kWhite);

}  // namespace omr
