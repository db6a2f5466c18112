#pragma once

#include <string>
#include <vector>

#include "omr/image.hpp"

namespace omr {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double scale = 1.0;        // differentiation sigma of the detection level, pixels
  double orientation = 0.0;  // radians in [0, 2*pi)
  double response = 0.0;
  std::vector<double> descriptor;  // unit L2 norm
};

// Multi-scale Harris corners with a rotation-normalized 4x4x8 gradient
// histogram descriptor. Scale/rotation robust enough for scanned sheets and
// answer boxes; `name` tags the feature space so keypoint sets from different
// configurations are never matched against each other.
struct DetectorConfig {
  std::string name = "harris-grad128";
  std::vector<double> scales = {1.6, 3.2};
  double integration_ratio = 2.0;
  double harris_k = 0.04;
  // Threshold on the scale-normalized Harris response of the [0, 1]-scaled image.
  double threshold = 1e-5;
  int nms_radius = 3;
  int max_keypoints = 1500;
  // Descriptor patch half-width in units of the keypoint scale.
  double patch_radius = 6.0;
  // Minimum distance from the image edge; negative derives it from the patch size.
  int border = -1;

  int descriptor_length() const { return 128; }
};

struct FeatureSet {
  std::string detector;
  Size image_size;
  std::vector<Keypoint> keypoints;
};

// Throws Error(EmptyImage) when either dimension is zero.
std::vector<Keypoint> detect_features(const GrayImage& image, const DetectorConfig& config);
FeatureSet extract_features(const GrayImage& image, const DetectorConfig& config);

struct Match {
  int sheet = 0;
  int reference = 0;
  double distance = 0.0;
};

using MatchSet = std::vector<Match>;

// Nearest-neighbour matching with the distance-ratio test (d1 < ratio * d2).
// Throws Error(DescriptorMismatch) when descriptor lengths or detector tags differ.
MatchSet match_features(const std::vector<Keypoint>& sheet, const std::vector<Keypoint>& reference,
                        double ratio);
MatchSet match_features(const FeatureSet& sheet, const FeatureSet& reference, double ratio);

}  // namespace omr
