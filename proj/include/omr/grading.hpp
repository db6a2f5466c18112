#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omr/metadata.hpp"
#include "omr/registration.hpp"
#include "omr/strategy.hpp"

namespace omr {

struct BoxResult {
  AnswerClass answer = AnswerClass::Empty;
  double confidence = 1.0;
};

struct QuestionResult {
  int question_index = 0;
  std::vector<BoxResult> boxes;
  std::optional<int> selected_choice;
  int confirmed_count = 0;
  double awarded = 0.0;
  bool flagged_for_review = false;
};

struct GradingConfig {
  double review_threshold = 0.6;
  // Rectangles may stick out of the registered image by this much; the overhang reads as white paper.
  int roi_tolerance_px = 2;
};

// Grading rule for one question: a crossed-out box becomes the answer only while
// no confirmed box has been seen; every confirmed box becomes the answer and is
// counted; the weight is awarded when at most one box is confirmed and the
// answer is the key. Several crossed-out boxes without a confirmed one keep the
// last and flag the question, as does any box below the review threshold.
QuestionResult grade_question(int question_index, const Question& question, std::vector<BoxResult> boxes,
                              double review_threshold = 0.6);

// One ROI per choice of `question_index`. Throws Error(QuestionUnknown) or Error(RoiOutOfBounds).
std::vector<RoiImage> extract_rois(const ColorImage& registered, const ExamMetadata& metadata, int question_index,
                                   int tolerance_px = 2);

struct SheetGrade {
  std::string sheet_id;
  double total = 0.0;
  std::vector<QuestionResult> questions;
  std::vector<RegistrationReport> registration;  // one per page when registration ran
};

// `pages[p]` is page p already in reference coordinates.
SheetGrade grade_sheet(std::span<const ColorImage> pages, const ExamMetadata& metadata, const StrategySpec& spec,
                       const GradingConfig& config = {});
SheetGrade grade_sheet(const ColorImage& registered, const ExamMetadata& metadata, const StrategySpec& spec,
                       const GradingConfig& config = {});

// Recomputes every question from the stored box classes (after a human override).
void regrade(SheetGrade& sheet, const ExamMetadata& metadata, const GradingConfig& config = {});

// Reference pages with their features extracted once per exam.
struct ReferenceSheet {
  std::vector<ColorImage> pages;
  std::vector<FeatureSet> features;

  static ReferenceSheet prepare(std::vector<ColorImage> pages, const DetectorConfig& detector);
};

struct SheetSource {
  std::string id;
  std::vector<std::filesystem::path> page_files;  // read when page_images is empty
  std::vector<ColorImage> page_images;
};

struct BatchConfig {
  GradingConfig grading;
  RegistrationConfig registration;
  int concurrency = 1;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

struct SheetFailure {
  std::string sheet_id;
  std::string error;  // error name, e.g. RegistrationFailed
  std::string message;
};

struct SheetOutcome {
  std::optional<SheetGrade> grade;
  std::optional<SheetFailure> failure;
};

struct RunReport {
  std::size_t graded = 0;
  std::vector<SheetFailure> failures;
};

struct BatchResult {
  std::vector<SheetOutcome> sheets;  // input order
  RunReport report;
};

// Registers and grades every sheet; failures are recorded per sheet.
BatchResult grade_batch(const std::vector<SheetSource>& sheets, const ReferenceSheet& reference,
                        const ExamMetadata& metadata, const StrategySpec& spec, const BatchConfig& config = {});

}  // namespace omr
