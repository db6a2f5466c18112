#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "omr/classifiers.hpp"
#include "omr/dataset.hpp"
#include "omr/eval.hpp"
#include "omr/grading.hpp"
#include "omr/metadata.hpp"
#include "omr/strategy.hpp"

namespace omr {

// PNG files of `dir` in name order. Single-page exams give one sheet per file,
// named by the file stem. Multi-page exams group `<sheet>_<page>.png` by `<sheet>`.
std::vector<SheetSource> discover_sheets(const std::filesystem::path& dir, int pages);

// Label-table image name of one page of a sheet.
std::string page_image_name(const std::string& sheet_id, int page, int pages);

struct RegisteredSheet {
  std::string id;
  std::vector<ColorImage> pages;
};

struct RegisteredBatch {
  std::vector<RegisteredSheet> sheets;  // successfully registered, input order
  std::vector<SheetFailure> failures;
};

RegisteredBatch register_sheets(const std::vector<SheetSource>& sources, const ReferenceSheet& reference,
                                const RegistrationConfig& config, int concurrency = 1);

// One sample per box of every sheet, ids consecutive from `first_id`.
// Throws Error(LabelMissing).
std::vector<LabeledSample> labeled_samples(const std::vector<RegisteredSheet>& sheets, const ExamMetadata& metadata,
                                           const LabelTable& labels, int first_id = 0);

// Ground-truth awarded marks per question, from labelled boxes.
SheetTruth sheet_truth(const std::string& sheet_id, const ExamMetadata& metadata, const LabelTable& labels);

// strategy.json: {"strategy": "SF" | "2S", "stage1": file, "stage2": file}, files relative to the json.
struct StrategyFile {
  StrategyKind kind = StrategyKind::StraightForward;
  std::string stage1;
  std::string stage2;
};

StrategyFile parse_strategy_file(const std::string& text);
std::string format_strategy_file(const StrategyFile& file);
// Loads and validates. Throws Error(SpecInvalid), Error(IoError), Error(ModelFormat).
StrategySpec load_strategy(const std::filesystem::path& json_path);

// Model file name for a kind trained on a class subset, e.g. "bovw_a.omrm".
std::string model_file_name(ModelKind kind, char subset);

// Trains per fold: SF trains `first` on the fold's classes; 2S trains `first`
// on confirmed/empty and `second` on confirmed/crossed out and composes them.
Trainer strategy_trainer(StrategyKind kind, const ClassifierConfig& first, const ClassifierConfig& second,
                         FeatureCache* cache);

// Returns the true label of any image it was built with; for protocol checks.
class OracleClassifier : public Classifier {
 public:
  OracleClassifier(const std::vector<LabeledSample>& samples, ClassSet classes);
  ClassScores classify(const ColorImage& roi) const override;
  ClassSet classes() const override { return classes_; }
  std::string name() const override { return "oracle"; }

 private:
  std::unordered_map<std::uint64_t, AnswerClass> labels_;
  ClassSet classes_;
};

std::uint64_t image_hash(const ColorImage& image);

}  // namespace omr
