#include "omr/scores.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace omr {

ClassScores scores_from_probabilities(const ClassSet& classes, std::span<const double> probabilities) {
  const auto members = classes.members();
  ClassScores out;
  double best = -1.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    out.scores[class_index(members[i])] = probabilities[i];
    if (probabilities[i] > best) {
      best = probabilities[i];
      out.predicted = members[i];
    }
  }
  out.confidence = std::clamp(best, 0.0, 1.0);
  return out;
}

ClassScores scores_from_margins(const ClassSet& classes, std::span<const double> margins) {
  const double top = *std::max_element(margins.begin(), margins.end());
  std::vector<double> p(margins.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < margins.size(); ++i) {
    p[i] = std::exp(margins[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return scores_from_probabilities(classes, p);
}

}  // namespace omr
