#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omr/classifiers.hpp"
#include "omr/grading.hpp"
#include "omr/strategy.hpp"
#include "omr/types.hpp"

namespace omr {

struct Fold {
  std::vector<int> train_ids;  // originals of the other folds plus their augmented variants
  std::vector<int> test_ids;   // originals of this fold only
};

// Stratified by (class, exam) over original samples. Augmented samples follow
// their source and only ever train. Throws Error(TooFewSamples) when a class has
// fewer than k originals.
std::vector<Fold> kfold_split(const std::vector<LabeledSample>& samples, int k, std::uint64_t seed);

struct ConfusionMatrix {
  ClassSet classes;
  std::array<std::array<int, 3>, 3> counts{};  // [true][predicted] by class_index

  void add(AnswerClass truth, AnswerClass predicted) { ++counts[class_index(truth)][class_index(predicted)]; }
  int total() const;
  int row_total(AnswerClass c) const;
  int column_total(AnswerClass c) const;
  double accuracy() const;
  // Mean recall over the classes in scope that have test samples.
  double balanced_accuracy() const;
};

struct ClassMetrics {
  AnswerClass cls = AnswerClass::Empty;
  int support = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;  // 0 when precision + recall is 0
};

std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& m);

struct FoldResult {
  int train_size = 0;
  int test_size = 0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  ConfusionMatrix confusion;
};

struct EvalReport {
  std::string classifier;
  std::string strategy = "SF";
  char subset = 'a';
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double mean_balanced_accuracy = 0.0;
  ConfusionMatrix confusion;  // summed over folds
  std::vector<ClassMetrics> metrics;
  int best_fold = 0;  // highest accuracy, first on ties
};

using Trainer = std::function<ClassifierPtr(const SampleRefs& train, const ClassSet& classes, int fold)>;

struct EvalOutcome {
  EvalReport report;
  ClassifierPtr best_model;
};

// Trains per fold on the subset's samples and tests on the held-out originals.
EvalOutcome evaluate_classifier(const std::vector<LabeledSample>& samples, const std::string& name,
                                const Trainer& trainer, char subset, int k, std::uint64_t seed);

// Trainer for a real model kind, sharing `cache` across folds.
Trainer model_trainer(const ClassifierConfig& config, FeatureCache* cache);

struct SheetTruth {
  std::vector<double> awarded;  // per question
};

struct GradingAccuracy {
  double question_based = 0.0;
  double sheet_based = 0.0;
};

// Throws Error(LengthMismatch) when sheet or question counts differ.
GradingAccuracy grading_accuracy(const std::vector<SheetGrade>& graded, const std::vector<SheetTruth>& truth);

// Mean accuracy per classifier (rows) and subset (columns a-d).
std::string render_accuracy_table(const std::vector<EvalReport>& reports);
// Per-fold accuracies, confusion matrix and per-class precision/recall/F.
std::string render_report(const EvalReport& report);
std::string report_json(const std::vector<EvalReport>& reports);

}  // namespace omr
