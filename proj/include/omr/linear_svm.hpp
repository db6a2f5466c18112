#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "omr/types.hpp"

namespace omr {

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 40;
  std::uint64_t seed = 0;
  bool standardize = true;
};

// One-vs-all linear SVMs trained by Pegasos-style subgradient descent on the
// L2-regularized hinge loss. The bias is a regularized constant feature.
// For each class the iterate with the lowest training objective across epochs is kept.
struct LinearSvm {
  ClassSet classes;
  int dim = 0;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<std::vector<double>> weights;  // per member class, dim + 1 (bias last)
  // Mean training hinge loss per class after each epoch.
  std::vector<std::vector<double>> hinge_history;

  static LinearSvm train(const std::vector<std::vector<double>>& x, const std::vector<AnswerClass>& y,
                         const ClassSet& classes, const SvmConfig& config);

  std::vector<double> margins(std::span<const double> features) const;
};

}  // namespace omr
