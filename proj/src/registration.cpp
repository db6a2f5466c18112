#include "omr/registration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "omr/error.hpp"
#include "omr/kernels.hpp"

namespace omr {

Transform Transform::affine(double a, double b, double tx, double c, double d, double ty) {
  Transform t;
  t.m_ = {a, b, tx, c, d, ty, 0, 0, 1};
  return t;
}

Transform Transform::rigid(double radians, Point2 center, double tx, double ty) {
  const double c = std::cos(radians), s = std::sin(radians);
  return affine(c, -s, center.x - c * center.x + s * center.y + tx, s, c, center.y - s * center.x - c * center.y + ty);
}

bool Transform::invertible() const { return std::abs(determinant()) > 1e-9; }

Transform Transform::inverse() const {
  const double det = determinant();
  if (std::abs(det) <= 1e-9) throw Error(ErrorCode::SingularTransform, "determinant is ~0");
  const double a = m_[4] / det, b = -m_[1] / det, c = -m_[3] / det, d = m_[0] / det;
  return affine(a, b, -(a * m_[2] + b * m_[5]), c, d, -(c * m_[2] + d * m_[5]));
}

Transform operator*(const Transform& lhs, const Transform& rhs) {
  const auto& l = lhs.m_;
  const auto& r = rhs.m_;
  return Transform::affine(l[0] * r[0] + l[1] * r[3], l[0] * r[1] + l[1] * r[4], l[0] * r[2] + l[1] * r[5] + l[2],
                           l[3] * r[0] + l[4] * r[3], l[3] * r[1] + l[4] * r[4], l[3] * r[2] + l[4] * r[5] + l[5]);
}

namespace {

double residual(const Transform& t, Point2 from, Point2 to) {
  const Point2 p = t.apply(from);
  return std::hypot(p.x - to.x, p.y - to.y);
}

// Least-squares affine fit on the given correspondences, in centered coordinates.
bool fit_affine(const std::vector<Point2>& from, const std::vector<Point2>& to, const std::vector<int>& idx,
                Transform& out) {
  const auto n = static_cast<Eigen::Index>(idx.size());
  if (n < 3) return false;
  double fx = 0, fy = 0, tx = 0, ty = 0;
  for (int i : idx) {
    fx += from[i].x;
    fy += from[i].y;
    tx += to[i].x;
    ty += to[i].y;
  }
  fx /= n;
  fy /= n;
  tx /= n;
  ty /= n;
  Eigen::MatrixXd a(n, 3);
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int i = idx[r];
    a(r, 0) = from[i].x - fx;
    a(r, 1) = from[i].y - fy;
    a(r, 2) = 1.0;
    rhs(r, 0) = to[i].x - tx;
    rhs(r, 1) = to[i].y - ty;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) return false;
  const Eigen::MatrixXd sol = qr.solve(rhs);
  const double a11 = sol(0, 0), a12 = sol(1, 0), b1 = sol(2, 0);
  const double a21 = sol(0, 1), a22 = sol(1, 1), b2 = sol(2, 1);
  out = Transform::affine(a11, a12, tx + b1 - a11 * fx - a12 * fy, a21, a22, ty + b2 - a21 * fx - a22 * fy);
  return out.invertible();
}

bool solve_minimal(const std::vector<Point2>& from, const std::vector<Point2>& to, const std::array<int, 3>& s,
                   Transform& out) {
  const Point2 p0 = from[s[0]], p1 = from[s[1]], p2 = from[s[2]];
  const double area = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
  if (std::abs(area) < 1e-6) return false;
  Eigen::Matrix3d a;
  a << p0.x, p0.y, 1, p1.x, p1.y, 1, p2.x, p2.y, 1;
  const Eigen::Vector3d u(to[s[0]].x, to[s[1]].x, to[s[2]].x);
  const Eigen::Vector3d v(to[s[0]].y, to[s[1]].y, to[s[2]].y);
  const auto lu = a.fullPivLu();
  const Eigen::Vector3d r0 = lu.solve(u);
  const Eigen::Vector3d r1 = lu.solve(v);
  out = Transform::affine(r0(0), r0(1), r0(2), r1(0), r1(1), r1(2));
  return out.invertible();
}

std::vector<int> inliers_of(const Transform& t, const std::vector<Point2>& from, const std::vector<Point2>& to,
                            double threshold) {
  std::vector<int> idx;
  for (int i = 0; i < static_cast<int>(from.size()); ++i) {
    if (residual(t, from[i], to[i]) < threshold) idx.push_back(i);
  }
  return idx;
}

}  // namespace

TransformEstimate estimate_transform(const std::vector<Point2>& from, const std::vector<Point2>& to,
                                     const MsacConfig& config) {
  const int n = static_cast<int>(from.size());
  if (n < 3) throw Error(ErrorCode::InsufficientMatches, std::to_string(n) + " pairs, need at least 3");

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  const double t2 = config.threshold_px * config.threshold_px;

  Transform best;
  double best_cost = std::numeric_limits<double>::infinity();
  bool found = false;
  long required = config.max_iterations;
  int iter = 0;
  for (; iter < config.max_iterations && iter < required; ++iter) {
    std::array<int, 3> s{pick(rng), pick(rng), pick(rng)};
    if (s[0] == s[1] || s[0] == s[2] || s[1] == s[2]) continue;
    Transform model;
    if (!solve_minimal(from, to, s, model)) continue;
    double cost = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i) {
      const double e = residual(model, from[i], to[i]);
      const double e2 = e * e;
      if (e2 < t2) {
        cost += e2;
        ++count;
      } else {
        cost += t2;
      }
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = model;
      found = true;
      const double w = static_cast<double>(count) / n;
      const double p_fail = 1.0 - w * w * w;
      if (p_fail <= 0.0) {
        required = 0;
      } else if (p_fail < 1.0) {
        required = static_cast<long>(std::ceil(std::log(1.0 - config.confidence) / std::log(p_fail)));
      }
    }
  }
  if (!found) throw Error(ErrorCode::NoConsensus, "no non-degenerate minimal sample");

  std::vector<int> inl = inliers_of(best, from, to, config.threshold_px);
  for (int round = 0; round < 10; ++round) {
    Transform refined;
    if (!fit_affine(from, to, inl, refined)) break;
    auto next = inliers_of(refined, from, to, config.threshold_px);
    if (next.size() < inl.size()) break;
    best = refined;
    const bool same = next == inl;
    inl = std::move(next);
    if (same) break;
  }
  if (static_cast<int>(inl.size()) < config.min_inliers) {
    throw Error(ErrorCode::NoConsensus,
                std::to_string(inl.size()) + " inliers, need " + std::to_string(config.min_inliers));
  }

  TransformEstimate est;
  est.transform = best;
  est.iterations = iter;
  double sum = 0.0;
  for (int i : inl) sum += residual(best, from[i], to[i]);
  est.mean_error = inl.empty() ? 0.0 : sum / inl.size();
  est.inliers = std::move(inl);
  return est;
}

TransformEstimate estimate_transform(const MatchSet& matches, const std::vector<Keypoint>& sheet_kps,
                                     const std::vector<Keypoint>& ref_kps, const MsacConfig& config) {
  std::vector<Point2> from, to;
  from.reserve(matches.size());
  to.reserve(matches.size());
  for (const auto& m : matches) {
    from.push_back({sheet_kps.at(m.sheet).x, sheet_kps.at(m.sheet).y});
    to.push_back({ref_kps.at(m.reference).x, ref_kps.at(m.reference).y});
  }
  return estimate_transform(from, to, config);
}

ColorImage warp(const ColorImage& image, const Transform& t, Size out_size) {
  const Transform inv = t.inverse();
  return kernels::warp_bilinear(image, inv.matrix(), out_size, kWhite);
}

Registration register_sheet(const ColorImage& sheet, const FeatureSet& reference, Size ref_size,
                            const RegistrationConfig& config) {
  if (sheet.empty()) throw Error(ErrorCode::EmptyImage, "sheet image is empty");
  const FeatureSet features = extract_features(to_gray(sheet), config.detector);
  Registration out;
  out.report.sheet_keypoints = static_cast<int>(features.keypoints.size());
  out.report.reference_keypoints = static_cast<int>(reference.keypoints.size());
  const MatchSet matches = match_features(features, reference, config.ratio);
  out.report.matches = static_cast<int>(matches.size());
  TransformEstimate est;
  try {
    est = estimate_transform(matches, features.keypoints, reference.keypoints, config.msac);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoConsensus || e.code() == ErrorCode::InsufficientMatches) {
      throw Error(ErrorCode::RegistrationFailed, e.what());
    }
    throw;
  }
  out.report.inliers = static_cast<int>(est.inliers.size());
  out.report.mean_reprojection_error = est.mean_error;
  out.transform = est.transform;
  out.registered = warp(sheet, est.transform, ref_size);
  return out;
}

}  // namespace omr
