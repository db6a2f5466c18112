#include "omr/grading.hpp"

#include <algorithm>
#include <atomic>

#include "omr/error.hpp"
#include "omr/png_io.hpp"

namespace omr {

QuestionResult grade_question(int question_index, const Question& question, std::vector<BoxResult> boxes,
                              double review_threshold) {
  QuestionResult r;
  r.question_index = question_index;
  r.boxes = std::move(boxes);
  int crossed = 0;
  for (int i = 0; i < static_cast<int>(r.boxes.size()); ++i) {
    const AnswerClass c = r.boxes[i].answer;
    if (c == AnswerClass::CrossedOut) ++crossed;
    if ((c == AnswerClass::CrossedOut && r.confirmed_count == 0) || c == AnswerClass::Confirmed) {
      r.selected_choice = i;
      if (c == AnswerClass::Confirmed) ++r.confirmed_count;
    }
    if (r.boxes[i].confidence < review_threshold) r.flagged_for_review = true;
  }
  if (crossed > 1 && r.confirmed_count == 0) r.flagged_for_review = true;
  if (r.confirmed_count <= 1 && r.selected_choice && *r.selected_choice == question.correct_choice) {
    r.awarded = question.weight;
  }
  return r;
}

std::vector<RoiImage> extract_rois(const ColorImage& registered, const ExamMetadata& metadata, int question_index,
                                   int tolerance_px) {
  std::vector<RoiImage> out;
  for (const RoiBox& box : metadata.boxes(question_index)) {
    const Rect& r = box.rect;
    if (r.x < -tolerance_px || r.y < -tolerance_px || r.x + r.w > registered.width() + tolerance_px ||
        r.y + r.h > registered.height() + tolerance_px) {
      throw Error(ErrorCode::RoiOutOfBounds, "question " + std::to_string(question_index) + " choice " +
                                                 std::to_string(box.choice_index) + " lies outside the " +
                                                 std::to_string(registered.width()) + "x" +
                                                 std::to_string(registered.height()) + " page");
    }
    out.push_back(RoiImage{crop(registered, r), box});
  }
  return out;
}

SheetGrade grade_sheet(std::span<const ColorImage> pages, const ExamMetadata& metadata, const StrategySpec& spec,
                       const GradingConfig& config) {
  spec.validate();
  SheetGrade sheet;
  for (int q = 0; q < static_cast<int>(metadata.questions.size()); ++q) {
    const Question& question = metadata.questions[q];
    if (question.page >= static_cast<int>(pages.size())) {
      throw Error(ErrorCode::QuestionUnknown, "question " + std::to_string(q) + " is on missing page " +
                                                  std::to_string(question.page));
    }
    std::vector<BoxResult> boxes;
    for (const RoiImage& roi : extract_rois(pages[question.page], metadata, q, config.roi_tolerance_px)) {
      const ClassScores s = classify_strategy(roi.pixels, spec);
      boxes.push_back({s.predicted, s.confidence});
    }
    sheet.questions.push_back(grade_question(q, question, std::move(boxes), config.review_threshold));
    sheet.total += sheet.questions.back().awarded;
  }
  return sheet;
}

SheetGrade grade_sheet(const ColorImage& registered, const ExamMetadata& metadata, const StrategySpec& spec,
                       const GradingConfig& config) {
  return grade_sheet(std::span<const ColorImage>(&registered, 1), metadata, spec, config);
}

void regrade(SheetGrade& sheet, const ExamMetadata& metadata, const GradingConfig& config) {
  sheet.total = 0.0;
  for (auto& q : sheet.questions) {
    q = grade_question(q.question_index, metadata.question(q.question_index), std::move(q.boxes),
                       config.review_threshold);
    sheet.total += q.awarded;
  }
}

ReferenceSheet ReferenceSheet::prepare(std::vector<ColorImage> pages, const DetectorConfig& detector) {
  ReferenceSheet ref;
  for (const auto& p : pages) ref.features.push_back(extract_features(to_gray(p), detector));
  ref.pages = std::move(pages);
  return ref;
}

BatchResult grade_batch(const std::vector<SheetSource>& sheets, const ReferenceSheet& reference,
                        const ExamMetadata& metadata, const StrategySpec& spec, const BatchConfig& config) {
  spec.validate();
  BatchResult result;
  result.sheets.resize(sheets.size());
  std::atomic<std::size_t> done{0};
  const int threads = std::max(1, config.concurrency);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sheets.size()); ++i) {
    const SheetSource& src = sheets[i];
    SheetOutcome& outcome = result.sheets[i];
    try {
      std::vector<ColorImage> loaded;
      if (src.page_images.empty())
        for (const auto& f : src.page_files) loaded.push_back(read_png(f));
      const std::vector<ColorImage>& raw = src.page_images.empty() ? loaded : src.page_images;
      if (raw.size() != reference.pages.size()) {
        throw Error(ErrorCode::ValidationError, "sheet has " + std::to_string(raw.size()) + " pages, exam has " +
                                                    std::to_string(reference.pages.size()));
      }
      std::vector<ColorImage> registered;
      std::vector<RegistrationReport> reports;
      for (std::size_t p = 0; p < raw.size(); ++p) {
        Registration reg = register_sheet(raw[p], reference.features[p], reference.pages[p].size(), config.registration);
        registered.push_back(std::move(reg.registered));
        reports.push_back(reg.report);
      }
      SheetGrade grade = grade_sheet(registered, metadata, spec, config.grading);
      grade.sheet_id = src.id;
      grade.registration = std::move(reports);
      outcome.grade = std::move(grade);
    } catch (const Error& e) {
      outcome.failure = SheetFailure{src.id, std::string(e.name()), e.what()};
    } catch (const std::exception& e) {
      outcome.failure = SheetFailure{src.id, "InternalError", e.what()};
    }
    const std::size_t n = ++done;
    if (config.progress) {
#pragma omp critical(omr_progress)
      config.progress(n, sheets.size());
    }
  }
  for (const auto& s : result.sheets) {
    if (s.grade) ++result.report.graded;
    if (s.failure) result.report.failures.push_back(*s.failure);
  }
  return result;
}

}  // namespace omr
