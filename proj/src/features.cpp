#include "omr/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omr/error.hpp"
#include "omr/kernels.hpp"

namespace omr {

ColorImage standardize_roi(const ColorImage& roi, int canonical_size) {
  if (roi.width() < kMinRoiSide || roi.height() < kMinRoiSide) {
    throw Error(ErrorCode::DegenerateRoi,
                "ROI is " + std::to_string(roi.width()) + "x" + std::to_string(roi.height()));
  }
  return resize_bilinear(roi, canonical_size, canonical_size);
}

RoiImage standardize_roi(const RoiImage& roi, int canonical_size) {
  return RoiImage{standardize_roi(roi.pixels, canonical_size), roi.source};
}

GrayImage gradient_magnitude(const GrayImage& roi_gray) {
  if (roi_gray.width() < 2 || roi_gray.height() < 2) {
    throw Error(ErrorCode::DegenerateRoi, "gradient needs at least 2x2 pixels");
  }
  return kernels::gradient_l1(roi_gray);
}

namespace {

double mean_abs_diff(const std::vector<double>& series) {
  if (series.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i < series.size(); ++i) sum += std::abs(series[i] - series[i - 1]);
  return sum / static_cast<double>(series.size() - 1);
}

}  // namespace

HogFeatures hog_features(const GrayImage& roi_gray, const HogConfig& config) {
  if (config.bins < 1 || config.cell_size < 1 || config.cells_per_side < 0) {
    throw Error(ErrorCode::ConfigMismatch, "invalid HoG configuration");
  }
  kernels::HogGeometry g;
  g.bins = config.bins;
  g.cell_size = config.cell_size;
  if (config.cells_per_side == 0) {
    g.cells_x = roi_gray.width() / config.cell_size;
    g.cells_y = roi_gray.height() / config.cell_size;
  } else {
    g.cells_x = g.cells_y = config.cells_per_side;
  }
  const int span_x = g.cells_x * g.cell_size;
  const int span_y = g.cells_y * g.cell_size;
  if (span_x > roi_gray.width() || span_y > roi_gray.height() || g.cells_x == 0 || g.cells_y == 0) {
    throw Error(ErrorCode::ConfigMismatch, "HoG crop " + std::to_string(span_x) + "x" + std::to_string(span_y) +
                                               " does not fit a " + std::to_string(roi_gray.width()) + "x" +
                                               std::to_string(roi_gray.height()) + " image");
  }
  g.origin_x = (roi_gray.width() - span_x) / 2;
  g.origin_y = (roi_gray.height() - span_y) / 2;

  HogFeatures out;
  out.full = kernels::hog_cells(roi_gray, g);
  out.summary.reserve(config.bins + 1);
  out.summary.push_back(mean_abs_diff(out.full));
  const std::size_t cells = static_cast<std::size_t>(g.cells_x) * g.cells_y;
  std::vector<double> series(cells);
  for (int b = 0; b < config.bins; ++b) {
    for (std::size_t c = 0; c < cells; ++c) series[c] = out.full[c * config.bins + b];
    out.summary.push_back(mean_abs_diff(series));
  }
  return out;
}

HandcraftedVector handcrafted_vector(const ColorImage& roi, const HandcraftedConfig& config) {
  if (config.hog.bins != 8) throw Error(ErrorCode::ConfigMismatch, "the 12-value vector needs 8 HoG bins");
  const GrayImage gray = to_gray(standardize_roi(roi, config.canonical_size));
  const GrayImage g = gradient_magnitude(gray);
  std::vector<double> values(g.data().begin(), g.data().end());

  HandcraftedVector v;
  v.values[0] = *std::max_element(values.begin(), values.end());
  v.values[2] = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  double median = values[mid];
  if (values.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  v.values[1] = median;

  const HogFeatures hog = hog_features(gray, config.hog);
  std::copy(hog.summary.begin(), hog.summary.end(), v.values.begin() + 3);
  return v;
}

DetectorConfig BagConfig::default_bag_detector() {
  DetectorConfig d;
  d.name = "harris-grad128-roi";
  d.scales = {1.5, 2.5};
  d.threshold = 2e-5;
  d.nms_radius = 2;
  d.max_keypoints = 48;
  d.patch_radius = 4.0;
  d.border = 2;
  return d;
}

DescriptorBag descriptor_bag(const ColorImage& roi, const BagConfig& config) {
  const GrayImage gray = pad(to_gray(standardize_roi(roi, config.canonical_size)), config.margin);
  DescriptorBag bag;
  for (auto& kp : detect_features(gray, config.detector)) {
    bag.sites.push_back({kp.x - config.margin, kp.y - config.margin});
    bag.descriptors.push_back(std::move(kp.descriptor));
  }
  return bag;
}

MeanIntensityVector mean_intensity(const ColorImage& roi) {
  if (roi.empty()) throw Error(ErrorCode::DegenerateRoi, "empty ROI");
  MeanIntensityVector v;
  std::array<double, 3> sum{};
  const auto px = roi.data();
  for (std::size_t i = 0; i < px.size(); i += 3) {
    for (int c = 0; c < 3; ++c) sum[c] += px[i + c];
  }
  const double n = static_cast<double>(px.size() / 3);
  for (int c = 0; c < 3; ++c) v.values[c] = std::clamp(sum[c] / n / 255.0, 0.0, 1.0);
  return v;
}

}  // namespace omr
