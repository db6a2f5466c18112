#pragma once

#include <utility>
#include <vector>

#include "omr/dataset.hpp"
#include "omr/registration.hpp"

namespace fixtures {

// Sheets put back into reference coordinates with the generator's exact transform.
inline std::vector<std::pair<std::string, omr::ColorImage>> aligned_sheets(const omr::SyntheticExam& exam) {
  std::vector<std::pair<std::string, omr::ColorImage>> out;
  for (const auto& s : exam.sheets) {
    out.emplace_back(s.image_name, omr::warp(s.image, s.sheet_to_reference, exam.reference.size()));
  }
  return out;
}

inline std::vector<omr::LabeledSample> samples(const omr::SynthConfig& config, int first_id = 0) {
  const omr::SyntheticExam exam = omr::generate_synthetic_exam(config);
  return omr::collect_labeled_samples(aligned_sheets(exam), exam.metadata, exam.labels(), first_id);
}

inline omr::SynthConfig balanced(int sheets, std::uint64_t seed) {
  omr::SynthConfig c;
  c.sheets = sheets;
  c.seed = seed;
  c.mixture = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  return c;
}

inline omr::SampleRefs filter(const std::vector<omr::LabeledSample>& samples, const omr::ClassSet& classes) {
  omr::SampleRefs out;
  for (const auto& s : samples)
    if (classes.contains(s.label)) out.push_back(&s);
  return out;
}

}  // namespace fixtures
