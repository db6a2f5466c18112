#include "omr/nbc.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "omr/error.hpp"

namespace omr {

NbcModel train_nbc(const std::vector<HandcraftedVector>& features, const std::vector<AnswerClass>& labels,
                   const ClassSet& classes, const std::map<AnswerClass, double>& prior_override) {
  if (features.size() != labels.size()) throw Error(ErrorCode::DegenerateTrainingSet, "features/labels length");
  if (classes.size() < 2) throw Error(ErrorCode::DegenerateTrainingSet, "need at least two classes");
  NbcModel model;
  model.classes = classes;
  std::array<int, 3> counts{};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!classes.contains(labels[i])) continue;
    const int c = class_index(labels[i]);
    ++counts[c];
    for (int d = 0; d < kHandcraftedLength; ++d) model.mean[c][d] += features[i].values[d];
  }
  int total = 0;
  for (AnswerClass c : classes.members()) {
    const int ci = class_index(c);
    if (counts[ci] < 2) {
      throw Error(ErrorCode::DegenerateTrainingSet,
                  std::string(class_name(c)) + " has " + std::to_string(counts[ci]) + " samples, need 2");
    }
    total += counts[ci];
    for (double& m : model.mean[ci]) m /= counts[ci];
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!classes.contains(labels[i])) continue;
    const int c = class_index(labels[i]);
    for (int d = 0; d < kHandcraftedLength; ++d) {
      const double e = features[i].values[d] - model.mean[c][d];
      model.variance[c][d] += e * e;
    }
  }
  for (AnswerClass c : classes.members()) {
    const int ci = class_index(c);
    for (double& v : model.variance[ci]) v = std::max(v / counts[ci], kNbcVarianceFloor);
  }

  double fixed = 0.0;
  double free_freq = 0.0;
  for (AnswerClass c : classes.members()) {
    if (auto it = prior_override.find(c); it != prior_override.end()) {
      if (it->second < 0.0 || it->second > 1.0) throw Error(ErrorCode::ConfigInvalid, "prior outside [0, 1]");
      fixed += it->second;
    } else {
      free_freq += static_cast<double>(counts[class_index(c)]) / total;
    }
  }
  if (fixed > 1.0 + 1e-12) throw Error(ErrorCode::ConfigInvalid, "prior overrides exceed 1");
  for (AnswerClass c : classes.members()) {
    const int ci = class_index(c);
    if (auto it = prior_override.find(c); it != prior_override.end()) {
      model.prior[ci] = it->second;
    } else {
      const double freq = static_cast<double>(counts[ci]) / total;
      model.prior[ci] = free_freq > 0.0 ? (1.0 - fixed) * freq / free_freq : 0.0;
    }
  }
  return model;
}

ClassScores classify_nbc(const NbcModel& model, std::span<const double> v) {
  if (v.size() != kHandcraftedLength) {
    throw Error(ErrorCode::DimensionMismatch, "expected 12 features, got " + std::to_string(v.size()));
  }
  const auto members = model.classes.members();
  std::vector<double> log_post(members.size(), -std::numeric_limits<double>::infinity());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < members.size(); ++m) {
    const int c = class_index(members[m]);
    if (model.prior[c] <= 0.0) continue;
    double lp = std::log(model.prior[c]);
    for (int d = 0; d < kHandcraftedLength; ++d) {
      const double var = model.variance[c][d];
      const double e = v[d] - model.mean[c][d];
      lp += -0.5 * std::log(2.0 * std::numbers::pi * var) - e * e / (2.0 * var);
    }
    log_post[m] = lp;
    top = std::max(top, lp);
  }
  std::vector<double> post(members.size(), 0.0);
  double sum = 0.0;
  for (std::size_t m = 0; m < members.size(); ++m) {
    if (std::isinf(log_post[m])) continue;
    post[m] = std::exp(log_post[m] - top);
    sum += post[m];
  }
  for (double& p : post) p /= sum;
  return scores_from_probabilities(model.classes, post);
}

}  // namespace omr
