#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "omr/dataset.hpp"
#include "omr/draw.hpp"
#include "omr/error.hpp"
#include "omr/features.hpp"
#include "omr/kernels.hpp"
#include "reference/reference.hpp"

using namespace omr;

namespace {

GrayImage random_gray(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  GrayImage img(w, h);
  for (auto& v : img.data()) v = static_cast<float>(d(rng));
  return img;
}

ColorImage box_image(int side, bool border) {
  ColorImage img(side, side, kWhite);
  if (border) {
    for (int i = 0; i < side; ++i)
      for (int c = 0; c < 3; ++c) {
        img.at(i, 0, c) = img.at(i, side - 1, c) = 0.0f;
        img.at(0, i, c) = img.at(side - 1, i, c) = 0.0f;
      }
  }
  return img;
}

ColorImage scribble(int side, std::uint64_t seed) {
  ColorImage img = box_image(side, true);
  draw_mark(img, Rect{0, 0, side, side}, AnswerClass::CrossedOut, seed);
  return img;
}

ColorImage x_mark(int side) {
  ColorImage img(side, side, kWhite);
  const draw::Color ink{20, 20, 20};
  draw::segment(img, {6, 6}, {side - 6.0, side - 6.0}, 2.5, ink);
  draw::segment(img, {side - 6.0, 6}, {6, side - 6.0}, 2.5, ink);
  return img;
}

ColorImage rotate90(const ColorImage& img) {
  ColorImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out.at(img.height() - 1 - y, x, c) = img.at(x, y, c);
  return out;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("standardization geometry") {
  ColorImage big(227, 227);
  std::mt19937 rng(1);
  for (auto& v : big.data()) v = static_cast<float>(rng() % 256);
  CHECK(standardize_roi(big, 227) == big);
  CHECK(standardize_roi(ColorImage(10, 20, 90.0f), 64).size() == Size{64, 64});
  const ColorImage gray = standardize_roi(ColorImage(13, 7, 143.0f), 50);
  for (float v : gray.data()) CHECK(std::abs(v - 143.0f) <= 1.0f);
  CHECK_THROWS_AS(standardize_roi(ColorImage(3, 10), 64), Error);
}

TEST_CASE("gradient of a constant image is zero") {
  const GrayImage g = gradient_magnitude(GrayImage(9, 9, 77.0f));
  for (float v : g.data()) CHECK(v == 0.0f);
}

TEST_CASE("vertical step edge") {
  for (float delta : {40.0f, 80.0f}) {
    GrayImage img(12, 6, 100.0f);
    for (int y = 0; y < 6; ++y)
      for (int x = 6; x < 12; ++x) img.at(x, y) = 100.0f + delta;
    const GrayImage g = gradient_magnitude(img);
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 12; ++x) {
        if (x == 5 || x == 6) {
          CHECK(g.at(x, y) == doctest::Approx(delta / 2));
        } else {
          CHECK(g.at(x, y) == 0.0f);
        }
      }
  }
}

TEST_CASE("gradient equals the naive oracle") {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const GrayImage img = random_gray(8, 8, seed);
    CHECK(gradient_magnitude(img) == ref::gradient_l1(img));
  }
  const GrayImage big = random_gray(227, 227, 99);
  CHECK(gradient_magnitude(big) == ref::gradient_l1(big));
}

TEST_CASE("gradient vanishes only on constant integer images") {
  for (unsigned seed = 0; seed < 50; ++seed) {
    GrayImage img(5, 5, 10.0f);
    img.at(seed % 5, (seed / 5) % 5) = 11.0f;
    const GrayImage g = gradient_magnitude(img);
    CHECK(std::any_of(g.data().begin(), g.data().end(), [](float v) { return v != 0.0f; }));
  }
}

TEST_CASE("HoG of a constant image is zero") {
  const HogFeatures h = hog_features(GrayImage(227, 227, 200.0f));
  CHECK(h.full.size() == 23328);
  CHECK(h.summary.size() == 9);
  CHECK(std::all_of(h.full.begin(), h.full.end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(h.summary.begin(), h.summary.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("HoG length and oracle agreement") {
  const GrayImage img = random_gray(227, 227, 5);
  const HogFeatures h = hog_features(img);
  REQUIRE(h.full.size() == 23328);
  const auto expected = ref::hog_cells(img, 5, 5, 54, 54, 4, 8);
  REQUIRE(expected.size() == h.full.size());
  for (std::size_t i = 0; i < expected.size(); ++i) REQUIRE(std::abs(h.full[i] - expected[i]) <= 1e-9);
  const auto summary = ref::hog_summary(expected, 8);
  for (int i = 0; i < 9; ++i) CHECK(std::abs(h.summary[i] - summary[i]) <= 1e-9);
}

TEST_CASE("HoG mass equals gradient mass over the crop") {
  const GrayImage img = random_gray(227, 227, 6);
  const HogFeatures h = hog_features(img);
  double total = 0.0;
  for (int y = 5; y < 5 + 216; ++y)
    for (int x = 5; x < 5 + 216; ++x) {
      const double gx = kernels::diff_x(img, x, y), gy = kernels::diff_y(img, x, y);
      total += std::hypot(gx, gy);
    }
  const double mass = std::accumulate(h.full.begin(), h.full.end(), 0.0);
  CHECK(std::abs(mass - total) <= 1e-3 * total);
}

TEST_CASE("diagonal stripes concentrate mass at 45 degrees") {
  GrayImage img(227, 227);
  for (int y = 0; y < 227; ++y)
    for (int x = 0; x < 227; ++x) img.at(x, y) = static_cast<float>(128.0 + 100.0 * std::sin(2 * M_PI * (x + y) / 10.0));
  const HogFeatures h = hog_features(img);
  const auto expected = ref::hog_cells(img, 5, 5, 54, 54, 4, 8);
  std::array<double, 8> mass{}, oracle{};
  for (std::size_t i = 0; i < h.full.size(); ++i) {
    mass[i % 8] += h.full[i];
    oracle[i % 8] += expected[i];
  }
  const int best = static_cast<int>(std::max_element(mass.begin(), mass.end()) - mass.begin());
  const int oracle_best = static_cast<int>(std::max_element(oracle.begin(), oracle.end()) - oracle.begin());
  CHECK(best == oracle_best);
  CHECK(best * 22.5 <= 45.0);
  CHECK((best + 1) * 22.5 >= 45.0);
}

TEST_CASE("blank and bordered boxes") {
  const HandcraftedVector blank = handcrafted_vector(box_image(40, false));
  for (double v : blank.values) CHECK(v == 0.0);

  const ColorImage bordered = box_image(40, true);
  const HandcraftedVector v = handcrafted_vector(bordered);
  CHECK(v.values[0] > 0.0);
  CHECK(v.values[2] > 0.0);
  // The border is thin, so most gradient pixels are zero and the median stays at 0.
  CHECK(v.values[1] == 0.0);
  const GrayImage g = gradient_magnitude(to_gray(standardize_roi(bordered, 227)));
  double border_mass = 0.0, mass = 0.0;
  for (int y = 0; y < 227; ++y)
    for (int x = 0; x < 227; ++x) {
      mass += g.at(x, y);
      if (x < 15 || y < 15 || x > 211 || y > 211) border_mass += g.at(x, y);
    }
  CHECK(border_mass == doctest::Approx(mass));
}

TEST_CASE("handcrafted vector matches the oracle bit for bit") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ColorImage roi = scribble(38, seed);
    const HandcraftedVector v = handcrafted_vector(roi);
    const auto expected = ref::handcrafted(to_gray(standardize_roi(roi, 227)));
    for (int i = 0; i < 12; ++i) CHECK(std::abs(v.values[i] - expected[i]) <= 1e-9 * std::max(1.0, expected[i]));
    for (double e : v.values) {
      CHECK(std::isfinite(e));
      CHECK(e >= 0.0);
    }
  }
}

TEST_CASE("gradient statistics are stable under upsampling") {
  const ColorImage roi = scribble(120, 9);
  const HandcraftedVector a = handcrafted_vector(roi);
  const HandcraftedVector b = handcrafted_vector(resize_bilinear(roi, 240, 240));
  // The first-difference HoG summaries (entries 4 to 11) react to the extra interpolation and are not compared.
  for (int i = 0; i < 4; ++i) CHECK(std::abs(a.values[i] - b.values[i]) <= 0.1 * std::max(a.values[i], b.values[i]));
}

TEST_CASE("descriptor bags") {
  CHECK(descriptor_bag(ColorImage(40, 40, 180.0f)).descriptors.empty());

  const DescriptorBag x = descriptor_bag(x_mark(40));
  REQUIRE_FALSE(x.descriptors.empty());
  const double c = (20.0 + 0.5) * 64.0 / 40.0 - 0.5;
  double nearest = 1e9;
  for (const Point2& p : x.sites) nearest = std::min(nearest, std::hypot(p.x - c, p.y - c));
  CHECK(nearest <= 5.0);
  for (const auto& d : x.descriptors) {
    CHECK(d.size() == x.descriptors.front().size());
    CHECK(std::sqrt(std::inner_product(d.begin(), d.end(), d.begin(), 0.0)) == doctest::Approx(1.0));
  }
}

TEST_CASE("descriptor bags survive a quarter turn") {
  const ColorImage img = scribble(40, 4);
  const DescriptorBag a = descriptor_bag(img);
  const DescriptorBag b = descriptor_bag(rotate90(img));
  REQUIRE_FALSE(a.descriptors.empty());
  REQUIRE_FALSE(b.descriptors.empty());
  int close = 0;
  for (const auto& d : a.descriptors) {
    double best = 1e9;
    for (const auto& e : b.descriptors) best = std::min(best, distance(d, e));
    close += best < 0.3;
  }
  CHECK(close * 2 >= static_cast<int>(a.descriptors.size()));
}

TEST_CASE("mean intensity") {
  CHECK(mean_intensity(ColorImage(8, 8, 255.0f)).values == std::array<double, 3>{1.0, 1.0, 1.0});
  CHECK(mean_intensity(ColorImage(8, 8, 0.0f)).values == std::array<double, 3>{0.0, 0.0, 0.0});
  ColorImage half(8, 8, 255.0f);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) half.at(x, y, c) = 0.0f;
  for (double v : mean_intensity(half).values) CHECK(v == doctest::Approx(0.5).epsilon(0.01));
}
