#include "omr/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "omr/error.hpp"

namespace omr {

namespace {

double dot(const std::vector<double>& w, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

}  // namespace

LinearSvm LinearSvm::train(const std::vector<std::vector<double>>& x, const std::vector<AnswerClass>& y,
                           const ClassSet& classes, const SvmConfig& config) {
  if (x.size() != y.size() || x.empty()) throw Error(ErrorCode::DegenerateTrainingSet, "no training samples");
  if (classes.size() < 2) throw Error(ErrorCode::DegenerateTrainingSet, "need at least two classes");
  LinearSvm svm;
  svm.classes = classes;
  svm.dim = static_cast<int>(x.front().size());
  const std::size_t n = x.size();
  for (const auto& row : x) {
    if (static_cast<int>(row.size()) != svm.dim) throw Error(ErrorCode::DimensionMismatch, "ragged feature rows");
  }

  svm.feature_mean.assign(svm.dim, 0.0);
  svm.feature_scale.assign(svm.dim, 1.0);
  if (config.standardize) {
    for (const auto& row : x)
      for (int d = 0; d < svm.dim; ++d) svm.feature_mean[d] += row[d];
    for (double& m : svm.feature_mean) m /= static_cast<double>(n);
    std::vector<double> var(svm.dim, 0.0);
    for (const auto& row : x)
      for (int d = 0; d < svm.dim; ++d) var[d] += (row[d] - svm.feature_mean[d]) * (row[d] - svm.feature_mean[d]);
    for (int d = 0; d < svm.dim; ++d) {
      const double sd = std::sqrt(var[d] / static_cast<double>(n));
      svm.feature_scale[d] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
  }
  std::vector<std::vector<double>> z(n, std::vector<double>(svm.dim + 1, 1.0));
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < svm.dim; ++d) z[i][d] = (x[i][d] - svm.feature_mean[d]) * svm.feature_scale[d];

  for (AnswerClass c : classes.members()) {
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = y[i] == c ? 1.0 : -1.0;
    std::vector<double> w(svm.dim + 1, 0.0);
    std::vector<double> best = w;
    double best_objective = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed * 7919 + static_cast<std::uint64_t>(code(c)));
    long t = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (config.lambda * static_cast<double>(t));
        const double margin = target[i] * dot(w, z[i]);
        const double shrink = 1.0 - eta * config.lambda;
        for (double& v : w) v *= shrink;
        if (margin < 1.0) {
          for (std::size_t d = 0; d < w.size(); ++d) w[d] += eta * target[i] * z[i][d];
        }
      }
      double hinge = 0.0;
      for (std::size_t i = 0; i < n; ++i) hinge += std::max(0.0, 1.0 - target[i] * dot(w, z[i]));
      hinge /= static_cast<double>(n);
      history.push_back(hinge);
      const double objective = 0.5 * config.lambda * dot(w, w) + hinge;
      if (objective < best_objective) {
        best_objective = objective;
        best = w;
      }
    }
    svm.weights.push_back(std::move(best));
    svm.hinge_history.push_back(std::move(history));
  }
  return svm;
}

std::vector<double> LinearSvm::margins(std::span<const double> features) const {
  if (static_cast<int>(features.size()) != dim) throw Error(ErrorCode::DimensionMismatch, "feature length");
  std::vector<double> out;
  out.reserve(weights.size());
  for (const auto& w : weights) {
    double s = w[dim];
    for (int d = 0; d < dim; ++d) s += w[d] * (features[d] - feature_mean[d]) * feature_scale[d];
    out.push_back(s);
  }
  return out;
}

}  // namespace omr
