#include "omr/local_features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "omr/error.hpp"
#include "omr/kernels.hpp"

namespace omr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kOrientationBins = 36;
constexpr int kCells = 4;
constexpr int kDescBins = 8;
constexpr int kSamples = 16;

struct ScaleLevel {
  double sigma = 0.0;
  GrayImage gx;
  GrayImage gy;
  std::vector<double> response;
};

ScaleLevel build_level(const GrayImage& unit_image, double sigma, const DetectorConfig& config) {
  const int w = unit_image.width();
  const int h = unit_image.height();
  ScaleLevel level;
  level.sigma = sigma;
  const GrayImage smooth = gaussian_blur(unit_image, sigma);
  level.gx = GrayImage(w, h);
  level.gy = GrayImage(w, h);
  GrayImage xx(w, h), yy(w, h), xy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = kernels::diff_x(smooth, x, y);
      const double dy = kernels::diff_y(smooth, x, y);
      level.gx.at(x, y) = static_cast<float>(dx);
      level.gy.at(x, y) = static_cast<float>(dy);
      xx.at(x, y) = static_cast<float>(dx * dx);
      yy.at(x, y) = static_cast<float>(dy * dy);
      xy.at(x, y) = static_cast<float>(dx * dy);
    }
  }
  const double integration = sigma * config.integration_ratio;
  xx = gaussian_blur(xx, integration);
  yy = gaussian_blur(yy, integration);
  xy = gaussian_blur(xy, integration);
  const double norm = std::pow(sigma, 4);
  level.response.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = xx.at(x, y), b = yy.at(x, y), c = xy.at(x, y);
      const double tr = a + b;
      level.response[static_cast<std::size_t>(y) * w + x] = norm * (a * b - c * c - config.harris_k * tr * tr);
    }
  }
  return level;
}

double parabolic_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (denom >= 0.0) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

double dominant_orientation(const ScaleLevel& level, double kx, double ky) {
  std::array<double, kOrientationBins> hist{};
  const double sigma_w = 1.5 * level.sigma;
  const int radius = static_cast<int>(std::lround(3.0 * sigma_w));
  const int cx = static_cast<int>(std::lround(kx));
  const int cy = static_cast<int>(std::lround(ky));
  for (int j = -radius; j <= radius; ++j) {
    for (int i = -radius; i <= radius; ++i) {
      if (i * i + j * j > radius * radius) continue;
      const int x = cx + i, y = cy + j;
      if (x < 0 || y < 0 || x >= level.gx.width() || y >= level.gx.height()) continue;
      const double gx = level.gx.at(x, y), gy = level.gy.at(x, y);
      const double mag = std::sqrt(gx * gx + gy * gy);
      if (mag == 0.0) continue;
      double angle = std::atan2(gy, gx);
      if (angle < 0.0) angle += kTwoPi;
      const int bin = std::min(static_cast<int>(angle / kTwoPi * kOrientationBins), kOrientationBins - 1);
      hist[bin] += mag * std::exp(-(i * i + j * j) / (2.0 * sigma_w * sigma_w));
    }
  }
  for (int pass = 0; pass < 2; ++pass) {
    std::array<double, kOrientationBins> smoothed{};
    for (int b = 0; b < kOrientationBins; ++b) {
      smoothed[b] = 0.25 * hist[(b + kOrientationBins - 1) % kOrientationBins] + 0.5 * hist[b] +
                    0.25 * hist[(b + 1) % kOrientationBins];
    }
    hist = smoothed;
  }
  const int peak = static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
  if (hist[peak] <= 0.0) return 0.0;
  const double offset = parabolic_offset(hist[(peak + kOrientationBins - 1) % kOrientationBins], hist[peak],
                                         hist[(peak + 1) % kOrientationBins]);
  double angle = (peak + 0.5 + offset) * kTwoPi / kOrientationBins;
  angle = std::fmod(angle, kTwoPi);
  if (angle < 0.0) angle += kTwoPi;
  return angle;
}

bool describe(const ScaleLevel& level, Keypoint& kp, double patch_radius) {
  std::vector<double> desc(kCells * kCells * kDescBins, 0.0);
  const double radius = patch_radius * level.sigma;
  const double c = std::cos(kp.orientation), s = std::sin(kp.orientation);
  const double sigma_w = 0.5 * radius;
  float gx = 0.0f, gy = 0.0f;
  for (int j = 0; j < kSamples; ++j) {
    const double v = ((j + 0.5) / kSamples * 2.0 - 1.0) * radius;
    for (int i = 0; i < kSamples; ++i) {
      const double u = ((i + 0.5) / kSamples * 2.0 - 1.0) * radius;
      const double px = kp.x + c * u - s * v;
      const double py = kp.y + s * u + c * v;
      if (!sample_bilinear(level.gx, px, py, &gx) || !sample_bilinear(level.gy, px, py, &gy)) continue;
      // Gradient expressed in the keypoint frame.
      const double rx = c * gx + s * gy;
      const double ry = -s * gx + c * gy;
      const double mag = std::sqrt(rx * rx + ry * ry);
      if (mag == 0.0) continue;
      double angle = std::atan2(ry, rx);
      if (angle < 0.0) angle += kTwoPi;
      const double weight = mag * std::exp(-(u * u + v * v) / (2.0 * sigma_w * sigma_w));
      const double cu = (u + radius) / (2.0 * radius) * kCells - 0.5;
      const double cv = (v + radius) / (2.0 * radius) * kCells - 0.5;
      const double co = angle / kTwoPi * kDescBins;
      const int u0 = static_cast<int>(std::floor(cu));
      const int v0 = static_cast<int>(std::floor(cv));
      const int o0 = static_cast<int>(std::floor(co));
      const double fu = cu - u0, fv = cv - v0, fo = co - o0;
      for (int dv = 0; dv <= 1; ++dv) {
        const int vv = v0 + dv;
        if (vv < 0 || vv >= kCells) continue;
        const double wv = dv ? fv : 1.0 - fv;
        for (int du = 0; du <= 1; ++du) {
          const int uu = u0 + du;
          if (uu < 0 || uu >= kCells) continue;
          const double wu = du ? fu : 1.0 - fu;
          for (int d_o = 0; d_o <= 1; ++d_o) {
            const int oo = (o0 + d_o) % kDescBins;
            const double wo = d_o ? fo : 1.0 - fo;
            desc[(vv * kCells + uu) * kDescBins + oo] += weight * wv * wu * wo;
          }
        }
      }
    }
  }
  auto normalize = [&desc]() {
    double n = 0.0;
    for (double d : desc) n += d * d;
    n = std::sqrt(n);
    if (n < 1e-12) return false;
    for (double& d : desc) d /= n;
    return true;
  };
  if (!normalize()) return false;
  for (double& d : desc) d = std::min(d, 0.2);
  if (!normalize()) return false;
  kp.descriptor = std::move(desc);
  return true;
}

struct Candidate {
  double response;
  int level;
  int x;
  int y;
};

}  // namespace

std::vector<Keypoint> detect_features(const GrayImage& image, const DetectorConfig& config) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "image has a zero dimension");
  const int w = image.width();
  const int h = image.height();

  GrayImage unit(w, h);
  std::transform(image.data().begin(), image.data().end(), unit.data().begin(),
                 [](float v) { return v / 255.0f; });

  std::vector<ScaleLevel> levels;
  levels.reserve(config.scales.size());
  for (double sigma : config.scales) levels.push_back(build_level(unit, sigma, config));

  std::vector<Candidate> candidates;
  for (int li = 0; li < static_cast<int>(levels.size()); ++li) {
    const auto& level = levels[li];
    const int border = config.border >= 0
                           ? config.border
                           : static_cast<int>(std::ceil(config.patch_radius * level.sigma * std::numbers::sqrt2)) + 1;
    const int r = config.nms_radius;
    for (int y = std::max(border, 1); y < h - std::max(border, 1); ++y) {
      for (int x = std::max(border, 1); x < w - std::max(border, 1); ++x) {
        const double v = level.response[static_cast<std::size_t>(y) * w + x];
        if (v <= config.threshold) continue;
        bool is_max = true;
        for (int j = -r; j <= r && is_max; ++j) {
          const int yy = y + j;
          if (yy < 0 || yy >= h) continue;
          for (int i = -r; i <= r; ++i) {
            const int xx = x + i;
            if ((i == 0 && j == 0) || xx < 0 || xx >= w) continue;
            const double n = level.response[static_cast<std::size_t>(yy) * w + xx];
            // Ties resolve toward the first pixel in raster order.
            const bool earlier = j < 0 || (j == 0 && i < 0);
            if (n > v || (earlier && n == v)) {
              is_max = false;
              break;
            }
          }
        }
        if (is_max) candidates.push_back({v, li, x, y});
      }
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.response, a.level, a.y, a.x) < std::tie(a.response, b.level, b.y, b.x);
  });

  std::vector<Keypoint> keypoints;
  for (const auto& cand : candidates) {
    if (static_cast<int>(keypoints.size()) >= config.max_keypoints) break;
    const auto& level = levels[cand.level];
    const auto resp = [&](int x, int y) { return level.response[static_cast<std::size_t>(y) * w + x]; };
    Keypoint kp;
    kp.x = cand.x + parabolic_offset(resp(cand.x - 1, cand.y), cand.response, resp(cand.x + 1, cand.y));
    kp.y = cand.y + parabolic_offset(resp(cand.x, cand.y - 1), cand.response, resp(cand.x, cand.y + 1));
    kp.scale = level.sigma;
    kp.response = cand.response;
    kp.orientation = dominant_orientation(level, kp.x, kp.y);
    if (describe(level, kp, config.patch_radius)) keypoints.push_back(std::move(kp));
  }
  return keypoints;
}

FeatureSet extract_features(const GrayImage& image, const DetectorConfig& config) {
  return FeatureSet{config.name, image.size(), detect_features(image, config)};
}

MatchSet match_features(const std::vector<Keypoint>& sheet, const std::vector<Keypoint>& reference, double ratio) {
  MatchSet matches;
  if (sheet.empty() || reference.empty()) return matches;
  const std::size_t dim = sheet.front().descriptor.size();
  auto check = [dim](const std::vector<Keypoint>& kps) {
    for (const auto& kp : kps) {
      if (kp.descriptor.size() != dim) {
        throw Error(ErrorCode::DescriptorMismatch, "descriptor lengths differ");
      }
    }
  };
  check(sheet);
  check(reference);
  if (dim == 0) throw Error(ErrorCode::DescriptorMismatch, "zero-length descriptors");

  std::vector<double> queries, candidates;
  queries.reserve(sheet.size() * dim);
  candidates.reserve(reference.size() * dim);
  for (const auto& kp : sheet) queries.insert(queries.end(), kp.descriptor.begin(), kp.descriptor.end());
  for (const auto& kp : reference) candidates.insert(candidates.end(), kp.descriptor.begin(), kp.descriptor.end());
  const auto nn = kernels::two_nearest(queries, candidates, static_cast<int>(dim));
  for (std::size_t i = 0; i < sheet.size(); ++i) {
    if (nn.best[i] < 0) continue;
    if (nn.best_dist[i] < ratio * nn.second_dist[i]) {
      matches.push_back({static_cast<int>(i), nn.best[i], nn.best_dist[i]});
    }
  }
  return matches;
}

MatchSet match_features(const FeatureSet& sheet, const FeatureSet& reference, double ratio) {
  if (sheet.detector != reference.detector) {
    throw Error(ErrorCode::DescriptorMismatch,
                "features from detector '" + sheet.detector + "' cannot be matched to '" + reference.detector + "'");
  }
  return match_features(sheet.keypoints, reference.keypoints, ratio);
}

}  // namespace omr
