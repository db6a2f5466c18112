#include "omr/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "omr/error.hpp"

namespace omr {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void write_raw(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes, int w, int h,
               png_uint_32 format) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (!png_image_write_to_file(&img, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string() + ": " + img.message);
  }
}

ColorImage from_rgb(const std::vector<std::uint8_t>& bytes, int w, int h) {
  ColorImage out(w, h);
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = bytes[i];
  return out;
}

}  // namespace

ColorImage read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.string().c_str())) {
    throw Error(ErrorCode::IoError, "cannot read " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::IoError, "cannot decode " + path.string() + ": " + img.message);
  }
  return from_rgb(bytes, static_cast<int>(img.width), static_cast<int>(img.height));
}

ColorImage decode_png(std::span<const std::uint8_t> data) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, data.data(), data.size())) {
    throw Error(ErrorCode::IoError, std::string("cannot read PNG data: ") + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> bytes(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, bytes.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(ErrorCode::IoError, std::string("cannot decode PNG data: ") + img.message);
  }
  return from_rgb(bytes, static_cast<int>(img.width), static_cast<int>(img.height));
}

std::vector<std::uint8_t> encode_png(const ColorImage& image) {
  std::vector<std::uint8_t> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("cannot encode PNG: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, bytes.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("cannot encode PNG: ") + img.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::filesystem::path& path, const ColorImage& image) {
  std::vector<std::uint8_t> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);
  write_raw(path, bytes, image.width(), image.height(), PNG_FORMAT_RGB);
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  std::vector<std::uint8_t> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), to_byte);
  write_raw(path, bytes, image.width(), image.height(), PNG_FORMAT_GRAY);
}

}  // namespace omr
