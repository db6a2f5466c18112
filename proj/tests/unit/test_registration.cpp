#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "omr/dataset.hpp"
#include "omr/error.hpp"
#include "omr/local_features.hpp"
#include "omr/registration.hpp"

using namespace omr;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

GrayImage checkerboard(int side, int square) {
  GrayImage img(side, side);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) img.at(x, y) = ((x / square + y / square) % 2) ? 255.0f : 0.0f;
  return img;
}

struct Correspondences {
  std::vector<Point2> from, to;
  std::vector<bool> inlier;
};

Correspondences make_pairs(const Transform& t, int n, double outlier_fraction, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 600.0);
  Correspondences c;
  const int outliers = static_cast<int>(std::round(n * outlier_fraction));
  for (int i = 0; i < n; ++i) {
    const Point2 p{coord(rng), coord(rng)};
    c.from.push_back(p);
    if (i < outliers) {
      c.to.push_back({coord(rng), coord(rng)});
      c.inlier.push_back(false);
    } else {
      c.to.push_back(t.apply(p));
      c.inlier.push_back(true);
    }
  }
  return c;
}

double mean_true_error(const Transform& est, const Correspondences& c) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < c.from.size(); ++i) {
    if (!c.inlier[i]) continue;
    const Point2 p = est.apply(c.from[i]);
    sum += std::hypot(p.x - c.to[i].x, p.y - c.to[i].y);
    ++n;
  }
  return sum / n;
}

GrayImage texture(int side, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 255.0f);
  GrayImage g(side, side);
  for (auto& v : g.data()) v = u(rng);
  GrayImage smooth = gaussian_blur(g, 2.0);
  for (auto& v : smooth.data()) v = std::clamp(128.0f + 6.0f * (v - 128.0f), 0.0f, 255.0f);
  return smooth;
}

Keypoint with_descriptor(std::vector<double> d) {
  double norm = 0.0;
  for (double v : d) norm += v * v;
  for (double& v : d) v /= std::sqrt(norm);
  Keypoint k;
  k.descriptor = std::move(d);
  return k;
}

std::vector<double> basis(std::initializer_list<std::pair<int, double>> entries) {
  std::vector<double> d(128, 0.0);
  for (auto [i, v] : entries) d[i] = v;
  return d;
}

const SyntheticExam& exam() {
  static const SyntheticExam e = [] {
    SynthConfig c;
    c.sheets = 1;
    c.seed = 3;
    return generate_synthetic_exam(c);
  }();
  return e;
}

double box_mad(const ColorImage& a, const ColorImage& b, const ExamMetadata& m) {
  double sum = 0.0;
  long n = 0;
  for (const auto& q : m.questions)
    for (const Rect& r : q.choices)
      for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x)
          for (int ch = 0; ch < 3; ++ch, ++n) sum += std::abs(a.at(x, y, ch) - b.at(x, y, ch));
  return sum / n;
}

}  // namespace

TEST_CASE("transform round trip and fixed bottom row") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Transform t = Transform::affine(1 + 0.2 * u(rng), 0.2 * u(rng), 50 * u(rng), 0.2 * u(rng), 1 + 0.2 * u(rng),
                                          50 * u(rng));
    const Transform inv = t.inverse();
    for (int i = 0; i < 10; ++i) {
      const Point2 p{300 * u(rng), 300 * u(rng)};
      const Point2 back = inv.apply(t.apply(p));
      CHECK(back.x == doctest::Approx(p.x).epsilon(1e-9).scale(1));
      CHECK(std::abs(back.y - p.y) < 1e-6);
      CHECK(std::abs(back.x - p.x) < 1e-6);
    }
    const Transform prod = t * inv;
    CHECK(prod(2, 0) == 0.0);
    CHECK(prod(2, 1) == 0.0);
    CHECK(prod(2, 2) == 1.0);
  }
  CHECK_THROWS_AS(Transform::affine(1, 2, 0, 2, 4, 0).inverse(), Error);
}

TEST_CASE("constant image yields no keypoints") {
  CHECK(detect_features(GrayImage(120, 90, 200.0f), DetectorConfig{}).empty());
}

TEST_CASE("detection is deterministic") {
  const GrayImage g = to_gray(exam().reference);
  const auto a = detect_features(g, DetectorConfig{});
  const auto b = detect_features(GrayImage(g), DetectorConfig{});
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
    CHECK(a[i].descriptor == b[i].descriptor);
  }
}

TEST_CASE("checkerboard keypoints sit on corners") {
  const auto kps = detect_features(checkerboard(256, 32), DetectorConfig{});
  CHECK(kps.size() >= 40);
  int near_corner = 0;
  for (const auto& k : kps) {
    double best = 1e9;
    for (int cy = 32; cy < 256; cy += 32)
      for (int cx = 32; cx < 256; cx += 32) best = std::min(best, std::hypot(k.x - (cx - 0.5), k.y - (cy - 0.5)));
    near_corner += best <= 3.0;
  }
  CHECK(near_corner == static_cast<int>(kps.size()));
}

TEST_CASE("descriptors are unit length") {
  for (const auto& k : detect_features(to_gray(exam().reference), DetectorConfig{})) {
    double n = 0.0;
    for (double v : k.descriptor) n += v * v;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("matching a keypoint list against itself") {
  const auto kps = detect_features(texture(240, 9), DetectorConfig{});
  REQUIRE(kps.size() > 20);
  const MatchSet m = match_features(kps, kps, 0.8);
  REQUIRE(m.size() == kps.size());
  for (const Match& x : m) {
    CHECK(x.sheet == x.reference);
    CHECK(x.distance == doctest::Approx(0.0));
  }
  CHECK(match_features(std::vector<Keypoint>{}, kps, 0.8).empty());
}

TEST_CASE("ratio test on hand-built descriptors") {
  std::vector<Keypoint> ref;
  for (int i = 0; i < 5; ++i) ref.push_back(with_descriptor(basis({{i, 1.0}})));
  const std::vector<Keypoint> sheet{
      with_descriptor(basis({{0, 1.0}})),
      with_descriptor(basis({{1, 1.0}})),
      with_descriptor(basis({{2, 1.0}, {3, 0.1}})),
      with_descriptor(basis({{0, 1.0}, {1, 1.0}})),
      with_descriptor(basis({{3, 1.0}, {4, 1.0}})),
  };
  // Brute force: sheet i passes when its nearest distance is below 0.8 times the second nearest.
  std::vector<std::pair<int, int>> expected;
  for (int i = 0; i < 5; ++i) {
    std::vector<std::pair<double, int>> d;
    for (int j = 0; j < 5; ++j) {
      double s = 0.0;
      for (int e = 0; e < 128; ++e) s += std::pow(sheet[i].descriptor[e] - ref[j].descriptor[e], 2);
      d.push_back({std::sqrt(s), j});
    }
    std::sort(d.begin(), d.end());
    if (d[0].first < 0.8 * d[1].first) expected.push_back({i, d[0].second});
  }
  REQUIRE(expected.size() == 3);
  const MatchSet m = match_features(sheet, ref, 0.8);
  REQUIRE(m.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m[i].sheet == expected[i].first);
    CHECK(m[i].reference == expected[i].second);
  }
}

TEST_CASE("descriptor length mismatch is rejected") {
  std::vector<Keypoint> a{with_descriptor({1.0, 0.0})};
  std::vector<Keypoint> b{with_descriptor(basis({{0, 1.0}}))};
  CHECK_THROWS_AS(match_features(a, b, 0.7), Error);
}

TEST_CASE("exact identity and translation are recovered") {
  const auto id = make_pairs(Transform::identity(), 40, 0.0, 1);
  const auto e = estimate_transform(id.from, id.to, MsacConfig{});
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(std::abs(e.transform(r, c) - (r == c ? 1.0 : 0.0)) < 1e-6);

  const auto tr = make_pairs(Transform::affine(1, 0, 10, 0, 1, -4), 40, 0.0, 2);
  const auto t = estimate_transform(tr.from, tr.to, MsacConfig{}).transform;
  CHECK(std::abs(t(0, 2) - 10.0) < 0.01);
  CHECK(std::abs(t(1, 2) + 4.0) < 0.01);
  CHECK(std::abs(t(0, 0) - 1.0) < 1e-3);
  CHECK(std::abs(t(0, 1)) < 1e-3);
  CHECK(std::abs(t(1, 0)) < 1e-3);
  CHECK(std::abs(t(1, 1) - 1.0) < 1e-3);
}

TEST_CASE("rotation with 20 percent outliers") {
  const Transform truth = Transform::rigid(2.0 * kDeg, {300, 300}, 5, 7);
  const auto c = make_pairs(truth, 100, 0.2, 3);
  const auto e = estimate_transform(c.from, c.to, MsacConfig{});
  CHECK(mean_true_error(e.transform, c) < 0.5);
  CHECK(e.transform(2, 0) == 0.0);
  CHECK(e.transform(2, 1) == 0.0);
  CHECK(e.transform(2, 2) == 1.0);
}

TEST_CASE("noiseless affine maps are recovered over 100 seeds") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (unsigned s = 0; s < 100; ++s) {
    const Transform truth =
        Transform::affine(1 + 0.05 * u(rng), 0.05 * u(rng), 20 * u(rng), 0.05 * u(rng), 1 + 0.05 * u(rng), 20 * u(rng));
    const auto c = make_pairs(truth, 30, 0.0, 100 + s);
    MsacConfig cfg;
    cfg.seed = s;
    const auto e = estimate_transform(c.from, c.to, cfg).transform;
    for (int i = 0; i < 9; ++i) CHECK(std::abs(e.matrix()[i] - truth.matrix()[i]) < 1e-3);
  }
}

TEST_CASE("estimation failures") {
  const auto few = make_pairs(Transform::identity(), 2, 0.0, 4);
  try {
    estimate_transform(few.from, few.to, MsacConfig{});
    FAIL("expected InsufficientMatches");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientMatches);
  }
  const auto junk = make_pairs(Transform::identity(), 30, 1.0, 5);
  try {
    estimate_transform(junk.from, junk.to, MsacConfig{});
    FAIL("expected NoConsensus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoConsensus);
  }
}

TEST_CASE("warp by identity and integer translation is exact") {
  const ColorImage& img = exam().reference;
  CHECK(warp(img, Transform::identity(), img.size()) == img);
  const ColorImage shifted = warp(img, Transform::affine(1, 0, 7, 0, 1, -3), img.size());
  for (int y = 0; y < img.height() - 3; ++y)
    for (int x = 7; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) REQUIRE(shifted.at(x, y, c) == img.at(x - 7, y + 3, c));
  CHECK(shifted.at(0, 0, 0) == kWhite);
}

TEST_CASE("warp round trip on a smooth image") {
  const ColorImage smooth = gaussian_blur(exam().reference, 2.0);
  const Transform t = Transform::rigid(2.5 * kDeg, {320, 450}, 4.3, -6.1);
  const ColorImage back = warp(warp(smooth, t, smooth.size()), t.inverse(), smooth.size());
  double sum = 0.0;
  long n = 0;
  for (int y = 40; y < smooth.height() - 40; ++y)
    for (int x = 40; x < smooth.width() - 40; ++x)
      for (int c = 0; c < 3; ++c, ++n) sum += std::abs(back.at(x, y, c) - smooth.at(x, y, c));
  CHECK(sum / n < 2.0);
}

TEST_CASE("registering the reference onto itself") {
  const ColorImage& ref = exam().reference;
  const FeatureSet fs = extract_features(to_gray(ref), DetectorConfig{});
  const Registration r = register_sheet(ref, fs, ref.size(), RegistrationConfig{});
  for (int i = 0; i < 9; ++i) CHECK(std::abs(r.transform.matrix()[i] - Transform::identity().matrix()[i]) < 1e-3);
  CHECK(r.report.inlier_ratio() > 0.9);
}

TEST_CASE("a rotated and shifted reference registers back") {
  // Band-limited so that resampling the 2 px box outlines twice stays within the tolerance.
  const ColorImage ref = gaussian_blur(exam().reference, 1.0);
  const FeatureSet fs = extract_features(to_gray(ref), DetectorConfig{});
  const Transform truth = Transform::rigid(1.5 * kDeg, {320, 450}, 6, -4);
  const ColorImage moved = warp(ref, truth, ref.size());
  const Registration a = register_sheet(moved, fs, ref.size(), RegistrationConfig{});
  CHECK(box_mad(a.registered, ref, exam().metadata) < 5.0);
  CHECK(box_mad(a.registered, warp(moved, truth.inverse(), ref.size()), exam().metadata) < 1.0);
  const Registration b = register_sheet(moved, fs, ref.size(), RegistrationConfig{});
  CHECK(a.transform.matrix() == b.transform.matrix());
  CHECK(a.registered == b.registered);
}

TEST_CASE("a blank page fails registration") {
  const ColorImage& ref = exam().reference;
  const FeatureSet fs = extract_features(to_gray(ref), DetectorConfig{});
  try {
    register_sheet(ColorImage(ref.width(), ref.height(), kWhite), fs, ref.size(), RegistrationConfig{});
    FAIL("expected RegistrationFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RegistrationFailed);
  }
}
