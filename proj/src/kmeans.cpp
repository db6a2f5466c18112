#include "omr/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "omr/error.hpp"
#include "omr/kernels.hpp"

namespace omr {

namespace {

double sq_dist(const double* a, const double* b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double e = a[i] - b[i];
    s += e * e;
  }
  return s;
}

}  // namespace

double within_cluster_sse(std::span<const double> points, std::span<const double> centers, int dim) {
  const auto a = kernels::nearest_centers(points, centers, dim);
  double s = 0.0;
  for (double d : a.sq_distance) s += d;
  return s;
}

KMeansResult kmeans(std::span<const double> points, int dim, const KMeansConfig& config) {
  if (dim <= 0) throw Error(ErrorCode::InsufficientDescriptors, "zero-dimensional points");
  const auto n = static_cast<std::ptrdiff_t>(points.size() / dim);
  const int k = config.k;
  if (k < 2) throw Error(ErrorCode::ConfigInvalid, "k must be at least 2");
  if (n < k) {
    throw Error(ErrorCode::InsufficientDescriptors,
                std::to_string(n) + " descriptors for a " + std::to_string(k) + "-word vocabulary");
  }

  std::mt19937_64 rng(config.seed);
  KMeansResult result;
  result.dim = dim;
  result.centers.reserve(static_cast<std::size_t>(k) * dim);

  // k-means++ seeding.
  std::uniform_int_distribution<std::ptrdiff_t> first(0, n - 1);
  const std::ptrdiff_t f = first(rng);
  result.centers.insert(result.centers.end(), points.begin() + f * dim, points.begin() + (f + 1) * dim);
  std::vector<double> d2(n);
  for (std::ptrdiff_t i = 0; i < n; ++i) d2[i] = sq_dist(points.data() + i * dim, result.centers.data(), dim);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) {
      throw Error(ErrorCode::InsufficientDescriptors, "fewer distinct descriptors than vocabulary words");
    }
    double target = unit(rng) * total;
    std::ptrdiff_t chosen = n - 1;
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      target -= d2[i];
      if (target < 0.0 && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    while (d2[chosen] <= 0.0) --chosen;
    const double* p = points.data() + chosen * dim;
    result.centers.insert(result.centers.end(), p, p + dim);
    for (std::ptrdiff_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points.data() + i * dim, p, dim));
  }

  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<int> counts(k);
  for (int iter = 0; iter < config.max_iterations; ++iter) {
    const auto assign = kernels::nearest_centers(points, result.centers, dim);
    double sse = 0.0;
    for (double v : assign.sq_distance) sse += v;
    result.sse_history.push_back(sse);
    result.iterations = iter + 1;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const int c = assign.index[i];
      ++counts[c];
      const double* p = points.data() + i * dim;
      double* s = sums.data() + static_cast<std::size_t>(c) * dim;
      for (int t = 0; t < dim; ++t) s[t] += p[t];
    }
    // Empty clusters take the points farthest from their current centers.
    std::vector<double> far = assign.sq_distance;
    double max_shift = 0.0;
    for (int c = 0; c < k; ++c) {
      double* center = result.centers.data() + static_cast<std::size_t>(c) * dim;
      std::vector<double> next(dim);
      if (counts[c] > 0) {
        for (int t = 0; t < dim; ++t) next[t] = sums[static_cast<std::size_t>(c) * dim + t] / counts[c];
      } else {
        const auto idx = std::max_element(far.begin(), far.end()) - far.begin();
        far[idx] = 0.0;
        std::copy(points.begin() + idx * dim, points.begin() + (idx + 1) * dim, next.begin());
      }
      max_shift = std::max(max_shift, std::sqrt(sq_dist(center, next.data(), dim)));
      std::copy(next.begin(), next.end(), center);
    }
    if (max_shift < config.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.sse_history.push_back(within_cluster_sse(points, result.centers, dim));
  return result;
}

}  // namespace omr
