#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "omr/image.hpp"
#include "omr/types.hpp"

// Naive serial implementations used as oracles for the optimized kernels.
namespace ref {

omr::GrayImage gradient_l1(const omr::GrayImage& image);

// Unsigned-orientation histograms over cells of `cell` px starting at (ox, oy).
std::vector<double> hog_cells(const omr::GrayImage& image, int ox, int oy, int cells_x, int cells_y, int cell,
                              int bins);

std::vector<double> hog_summary(const std::vector<double>& full, int bins);

// [max, median, mean] of the L1 gradient followed by the 9 HoG summaries of a gray image
// that is already at canonical size.
std::array<double, 12> handcrafted(const omr::GrayImage& gray);

std::vector<int> nearest_centers(const std::vector<std::vector<double>>& points,
                                 const std::vector<std::vector<double>>& centers);

std::vector<double> bovw_histogram(const std::vector<std::vector<double>>& bag,
                                   const std::vector<std::vector<double>>& centers);

omr::ColorImage warp(const omr::ColorImage& source, const std::array<double, 9>& inverse, omr::Size out_size);

// The grading rule for one question, written as a plain loop.
struct QuestionOutcome {
  std::optional<int> answer;
  int answers = 0;
  double awarded = 0.0;
};
QuestionOutcome grade_question(const std::vector<omr::AnswerClass>& boxes, int correct_choice, double weight);

// Gaussian naive Bayes posterior evaluated as prior * product of densities, normalized.
std::array<double, 3> nbc_posterior(const std::array<double, 3>& prior,
                                    const std::array<std::array<double, 12>, 3>& mean,
                                    const std::array<std::array<double, 12>, 3>& variance,
                                    const std::array<double, 12>& v, int dims = 12);

// Plain Lloyd iterations from k distinct random points; returns the final SSE.
double lloyd_sse(const std::vector<std::vector<double>>& points, int k, unsigned seed, int max_iterations);

}  // namespace ref
