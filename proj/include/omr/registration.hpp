#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "omr/image.hpp"
#include "omr/local_features.hpp"

namespace omr {

// Affine map in homogeneous form; the bottom row is always exactly [0, 0, 1].
class Transform {
 public:
  Transform() = default;  // identity

  static Transform identity() { return {}; }
  static Transform affine(double a, double b, double tx, double c, double d, double ty);
  // Rotation by `radians` about `center`, followed by translation (tx, ty).
  static Transform rigid(double radians, Point2 center, double tx, double ty);

  const std::array<double, 9>& matrix() const noexcept { return m_; }
  double operator()(int row, int col) const { return m_[row * 3 + col]; }

  Point2 apply(Point2 p) const { return {m_[0] * p.x + m_[1] * p.y + m_[2], m_[3] * p.x + m_[4] * p.y + m_[5]}; }
  double determinant() const { return m_[0] * m_[4] - m_[1] * m_[3]; }
  bool invertible() const;
  // Throws Error(SingularTransform).
  Transform inverse() const;

  friend Transform operator*(const Transform& lhs, const Transform& rhs);

 private:
  std::array<double, 9> m_{1, 0, 0, 0, 1, 0, 0, 0, 1};
};

struct MsacConfig {
  double threshold_px = 3.0;
  int max_iterations = 2000;
  int min_inliers = 10;
  double confidence = 0.99;
  std::uint64_t seed = 0;
};

struct TransformEstimate {
  Transform transform;  // sheet -> reference
  std::vector<int> inliers;  // indices into the MatchSet
  double mean_error = 0.0;   // mean inlier reprojection error, pixels
  int iterations = 0;
};

// Throws Error(InsufficientMatches) for fewer than 3 pairs and Error(NoConsensus)
// when no hypothesis gathers `min_inliers` inliers.
TransformEstimate estimate_transform(const MatchSet& matches, const std::vector<Keypoint>& sheet_kps,
                                     const std::vector<Keypoint>& ref_kps, const MsacConfig& config);

// Point-correspondence form used by the MSAC core.
TransformEstimate estimate_transform(const std::vector<Point2>& from, const std::vector<Point2>& to,
                                     const MsacConfig& config);

// Output pixel p is sampled at t^-1(p); pixels mapping outside the source are white.
ColorImage warp(const ColorImage& image, const Transform& t, Size out_size);

struct RegistrationConfig {
  DetectorConfig detector;
  double ratio = 0.7;
  MsacConfig msac;
};

struct RegistrationReport {
  int sheet_keypoints = 0;
  int reference_keypoints = 0;
  int matches = 0;
  int inliers = 0;
  double mean_reprojection_error = 0.0;

  double inlier_ratio() const { return matches > 0 ? static_cast<double>(inliers) / matches : 0.0; }
};

struct Registration {
  ColorImage registered;
  Transform transform;
  RegistrationReport report;
};

// Detect -> match -> estimate -> warp. Feature and consensus failures surface
// as Error(RegistrationFailed).
Registration register_sheet(const ColorImage& sheet, const FeatureSet& reference, Size ref_size,
                            const RegistrationConfig& config);

}  // namespace omr
