#pragma once

#include <array>
#include <span>

#include "omr/types.hpp"

namespace omr {

// Uniform classifier output; entries of `scores` are indexed by class_index().
struct ClassScores {
  std::array<double, 3> scores{};
  AnswerClass predicted = AnswerClass::Empty;
  double confidence = 0.0;

  friend bool operator==(const ClassScores&, const ClassScores&) = default;
};

// Normalizes `probabilities` (one entry per member of `classes`) into ClassScores;
// confidence is the winning probability.
ClassScores scores_from_probabilities(const ClassSet& classes, std::span<const double> probabilities);

// Softmax over raw margins; used to turn SVM decision values into pseudo-probabilities.
ClassScores scores_from_margins(const ClassSet& classes, std::span<const double> margins);

}  // namespace omr
