#pragma once

#include <array>
#include <vector>

#include "omr/image.hpp"
#include "omr/local_features.hpp"
#include "omr/types.hpp"

namespace omr {

inline constexpr int kMinRoiSide = 4;

// Bilinear resize to canonical x canonical. Throws Error(DegenerateRoi) below 4 px a side.
RoiImage standardize_roi(const RoiImage& roi, int canonical_size);
ColorImage standardize_roi(const ColorImage& roi, int canonical_size);

// g = |df/dx| + |df/dy|. Requires at least 2x2.
GrayImage gradient_magnitude(const GrayImage& roi_gray);

struct HogConfig {
  int bins = 8;
  int cell_size = 4;
  // Cells per side over a centered square crop; 0 fits as many cells as the image allows.
  int cells_per_side = 54;
};

struct HogFeatures {
  std::vector<double> full;     // cell-major, `bins` entries per cell
  std::vector<double> summary;  // mean |first difference| of `full`, then of each bin's cell series
};

// With the default geometry a 227x227 input yields 54*54*8 = 23328 values.
// Throws Error(ConfigMismatch) when the configured crop does not fit the image.
HogFeatures hog_features(const GrayImage& roi_gray, const HogConfig& config = {});

inline constexpr int kHandcraftedLength = 12;

struct HandcraftedVector {
  std::array<double, kHandcraftedLength> values{};
};

struct HandcraftedConfig {
  int canonical_size = 227;
  HogConfig hog;
};

// [max(g), median(g), mean(g), 9 HoG summaries] on the standardized gray ROI.
HandcraftedVector handcrafted_vector(const ColorImage& roi, const HandcraftedConfig& config = {});

struct DescriptorBag {
  std::vector<std::vector<double>> descriptors;
  std::vector<Point2> sites;  // keypoint positions in standardized ROI coordinates
};

struct BagConfig {
  int canonical_size = 64;
  // White margin added around the ROI so box corners are describable.
  int margin = 16;
  DetectorConfig detector = default_bag_detector();

  static DetectorConfig default_bag_detector();
};

DescriptorBag descriptor_bag(const ColorImage& roi, const BagConfig& config = {});

struct MeanIntensityVector {
  std::array<double, 3> values{};  // per channel, scaled to [0, 1]
};

MeanIntensityVector mean_intensity(const ColorImage& roi);

}  // namespace omr
