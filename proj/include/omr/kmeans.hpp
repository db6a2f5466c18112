#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace omr {

struct KMeansConfig {
  int k = 200;
  int max_iterations = 300;
  double tolerance = 1e-4;  // largest center shift that counts as converged
  std::uint64_t seed = 0;
};

struct KMeansResult {
  int dim = 0;
  std::vector<double> centers;      // k rows of `dim`
  std::vector<double> sse_history;  // SSE after each assignment step, then of the final centers
  int iterations = 0;
  bool converged = false;

  int k() const { return dim > 0 ? static_cast<int>(centers.size() / dim) : 0; }
  double sse() const { return sse_history.empty() ? 0.0 : sse_history.back(); }
};

// Lloyd iterations from a k-means++ seeding. Throws Error(InsufficientDescriptors)
// when there are fewer distinct points than k.
KMeansResult kmeans(std::span<const double> points, int dim, const KMeansConfig& config);

double within_cluster_sse(std::span<const double> points, std::span<const double> centers, int dim);

}  // namespace omr
