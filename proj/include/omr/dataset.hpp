#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "omr/grading.hpp"
#include "omr/metadata.hpp"
#include "omr/registration.hpp"
#include "omr/types.hpp"

namespace omr {

struct AugmentationConfig {
  std::vector<int> translations_px{1, 2, 3, 4};  // each applied left, right, up and down
  std::vector<double> rotations_deg{-3, -2, -1, 1, 2, 3};
  bool flip_horizontal = true;
  bool flip_vertical = true;

  std::size_t variants() const {
    return 4 * translations_px.size() + rotations_deg.size() + (flip_horizontal ? 1 : 0) + (flip_vertical ? 1 : 0);
  }
};

// Translated, rotated (about the center) and flipped copies, same size, exposed
// pixels white. Order: translations (left, right, up, down per offset), rotations, flips.
// Throws Error(DegenerateRoi) and Error(ConfigInvalid) for a 0 degree rotation.
std::vector<ColorImage> augment_crossed_out(const ColorImage& roi, const AugmentationConfig& config = {});

// Shifts content by (dx, dy) pixels, exposing white.
ColorImage translate(const ColorImage& img, int dx, int dy);

struct MarkMixture {
  double confirmed = 0.25;
  double crossed_out = 0.05;
  double empty = 0.70;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  std::string exam_id = "exam0";
  int sheets = 30;
  // Index of the first generated sheet; sheets with other indices use the same layout.
  int first_sheet = 0;
  int questions = 10;
  int choices = 4;
  int box_size = 38;
  int page_width = 640;
  int page_height = 900;
  MarkMixture mixture;
  // Every sheet marks exactly the key, ignoring the mixture.
  bool perfect_key = false;
  double max_rotation_deg = 3.0;
  double max_shift_px = 10.0;
  double noise_sigma = 6.0;
  // Question weights cycle through this list.
  std::vector<double> weights{1.0, 1.5, 2.0};
};

struct SyntheticSheet {
  std::string image_name;  // examID_sheet_page
  ColorImage image;
  std::vector<std::vector<AnswerClass>> labels;  // [question][choice]
  double grade = 0.0;
  Transform sheet_to_reference;
};

struct SyntheticExam {
  ColorImage reference;
  ExamMetadata metadata;
  std::vector<SyntheticSheet> sheets;

  LabelTable labels() const;
};

// Deterministic per seed. Throws Error(ConfigInvalid).
SyntheticExam generate_synthetic_exam(const SynthConfig& config);

// Draws one answer mark of class `c` into the box `r` (the box outline must already be there).
void draw_mark(ColorImage& img, Rect r, AnswerClass c, std::uint64_t seed);

// One sample per (sheet, box), cropped from sheets already in reference
// coordinates. Ids are assigned consecutively from `first_id`.
// Throws Error(LabelMissing) when a box has no label.
std::vector<LabeledSample> collect_labeled_samples(const std::vector<std::pair<std::string, ColorImage>>& sheets,
                                                   const ExamMetadata& metadata, const LabelTable& labels,
                                                   int first_id = 0);

// Appends augmented crossed-out variants (augmented = true, source_id set) for every
// original crossed-out sample in `samples`.
void append_augmented(std::vector<LabeledSample>& samples, const AugmentationConfig& config = {});

// Writes reference.png, metadata.json, labels.csv and sheets/<image_name>.png.
void write_synthetic_exam(const std::filesystem::path& dir, const SyntheticExam& exam);

}  // namespace omr
