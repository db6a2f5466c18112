#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "omr/image.hpp"

namespace omr {

// Any PNG color type is expanded to RGB. Throws Error(IoError).
ColorImage read_png(const std::filesystem::path& path);

// Values are rounded and clamped to 8 bits.
void write_png(const std::filesystem::path& path, const ColorImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

ColorImage decode_png(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> encode_png(const ColorImage& image);

}  // namespace omr
