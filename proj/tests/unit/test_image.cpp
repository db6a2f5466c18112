#include "doctest.h"

#include <filesystem>
#include <random>

#include "omr/error.hpp"
#include "omr/image.hpp"
#include "omr/png_io.hpp"

using namespace omr;

namespace {

ColorImage random_color(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  ColorImage img(w, h);
  for (auto& v : img.data()) v = static_cast<float>(d(rng));
  return img;
}

}  // namespace

TEST_CASE("luma conversion weights") {
  ColorImage img(1, 1);
  img.at(0, 0, 0) = 100;
  img.at(0, 0, 1) = 50;
  img.at(0, 0, 2) = 200;
  CHECK(to_gray(img).at(0, 0) == doctest::Approx(0.299 * 100 + 0.587 * 50 + 0.114 * 200).epsilon(1e-6));
}

TEST_CASE("crop fills outside pixels") {
  const ColorImage img = random_color(10, 8, 1);
  const ColorImage c = crop(img, Rect{-2, 3, 5, 4});
  REQUIRE(c.size() == Size{5, 4});
  CHECK(c.at(0, 0, 1) == kWhite);
  CHECK(c.at(1, 3, 2) == kWhite);
  CHECK(c.at(2, 0, 0) == img.at(0, 3, 0));
  CHECK(c.at(4, 3, 2) == img.at(2, 6, 2));
}

TEST_CASE("same-size resize is exact and constants survive resampling") {
  const ColorImage img = random_color(13, 7, 2);
  CHECK(resize_bilinear(img, 13, 7) == img);
  ColorImage gray(9, 5, 117.0f);
  const ColorImage big = resize_bilinear(gray, 31, 17);
  for (float v : big.data()) CHECK(v == doctest::Approx(117.0f));
}

TEST_CASE("flips are involutions") {
  const ColorImage img = random_color(6, 4, 3);
  CHECK(flip_horizontal(flip_horizontal(img)) == img);
  CHECK(flip_vertical(flip_vertical(img)) == img);
  CHECK(flip_horizontal(img).at(0, 1, 2) == img.at(5, 1, 2));
  CHECK(flip_vertical(img).at(2, 0, 1) == img.at(2, 3, 1));
}

TEST_CASE("pad surrounds with fill") {
  const ColorImage img = random_color(3, 3, 4);
  const ColorImage p = pad(img, 2);
  REQUIRE(p.size() == Size{7, 7});
  CHECK(p.at(0, 0, 0) == kWhite);
  CHECK(p.at(2, 2, 1) == img.at(0, 0, 1));
}

TEST_CASE("blur of a constant image is constant") {
  GrayImage g(12, 9, 80.0f);
  const GrayImage blurred = gaussian_blur(g, 2.0);
  for (float v : blurred.data()) CHECK(v == doctest::Approx(80.0f));
}

TEST_CASE("bilinear sampling at integer coordinates returns the pixel") {
  const ColorImage img = random_color(5, 5, 5);
  float out[3];
  REQUIRE(sample_bilinear(img, 3.0, 2.0, out));
  CHECK(out[0] == img.at(3, 2, 0));
  CHECK_FALSE(sample_bilinear(img, 4.5, 2.0, out));
}

TEST_CASE("PNG round trip through file and memory") {
  const ColorImage img = random_color(17, 11, 6);
  const auto path = std::filesystem::temp_directory_path() / "omr_test_image.png";
  write_png(path, img);
  CHECK(read_png(path) == img);
  CHECK(decode_png(encode_png(img)) == img);
  std::filesystem::remove(path);
}

TEST_CASE("unreadable PNG raises IoError") {
  CHECK_THROWS_AS(read_png("/nonexistent/file.png"), Error);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4};
  try {
    decode_png(junk);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}
