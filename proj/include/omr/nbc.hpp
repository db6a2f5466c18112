#pragma once

#include <array>
#include <map>
#include <span>
#include <vector>

#include "omr/features.hpp"
#include "omr/scores.hpp"
#include "omr/types.hpp"

namespace omr {

inline constexpr double kNbcVarianceFloor = 1e-6;

// Gaussian naive Bayes over the 12-value handcrafted vector.
struct NbcModel {
  ClassSet classes;
  std::array<double, 3> prior{};  // indexed by class_index; zero for classes outside `classes`
  std::array<std::array<double, kHandcraftedLength>, 3> mean{};
  std::array<std::array<double, kHandcraftedLength>, 3> variance{};
};

// Maximum-likelihood per-feature Gaussians. Priors are empirical frequencies unless
// `prior_override` fixes some classes; the remaining mass is shared by the others in
// proportion to their frequencies. Throws Error(DegenerateTrainingSet) when a class
// has fewer than two samples.
NbcModel train_nbc(const std::vector<HandcraftedVector>& features, const std::vector<AnswerClass>& labels,
                   const ClassSet& classes, const std::map<AnswerClass, double>& prior_override = {});

// Log-domain posterior; classes with zero prior are excluded.
ClassScores classify_nbc(const NbcModel& model, std::span<const double> v);
inline ClassScores classify_nbc(const NbcModel& model, const HandcraftedVector& v) {
  return classify_nbc(model, std::span<const double>(v.values));
}

}  // namespace omr
