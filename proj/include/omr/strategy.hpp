#pragma once

#include <memory>
#include <string>

#include "omr/classifiers.hpp"
#include "omr/scores.hpp"

namespace omr {

// Anything that turns an answer-box image into ClassScores. Implementations
// must be safe to call concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassScores classify(const ColorImage& roi) const = 0;
  virtual ClassSet classes() const = 0;
  virtual std::string name() const = 0;
};

class ModelClassifier : public Classifier {
 public:
  explicit ModelClassifier(TrainedModel model) : model_(std::move(model)) {}
  ClassScores classify(const ColorImage& roi) const override { return model_.classify(roi); }
  ClassSet classes() const override { return model_.classes(); }
  std::string name() const override { return std::string(model_kind_name(model_.kind())); }
  const TrainedModel& model() const { return model_; }

 private:
  TrainedModel model_;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

inline ClassifierPtr make_classifier(TrainedModel model) {
  return std::make_shared<ModelClassifier>(std::move(model));
}

enum class StrategyKind { StraightForward, TwoStage };

struct StrategySpec {
  StrategyKind kind = StrategyKind::StraightForward;
  ClassifierPtr stage1;
  ClassifierPtr stage2;

  static StrategySpec straight(ClassifierPtr model);
  static StrategySpec two_stage(ClassifierPtr filled_vs_empty, ClassifierPtr confirmed_vs_crossed);

  // Throws Error(SpecInvalid): SF needs a three-class stage 1 and no stage 2;
  // 2S needs a confirmed/empty stage 1 and a confirmed/crossed-out stage 2.
  void validate() const;
  std::string describe() const;
};

// SF returns stage 1 as is. 2S returns stage 1 when it says Empty, else stage 2.
ClassScores classify_strategy(const ColorImage& roi, const StrategySpec& spec);

// A validated strategy behind the Classifier interface, covering all three classes.
class StrategyClassifier : public Classifier {
 public:
  explicit StrategyClassifier(StrategySpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  ClassScores classify(const ColorImage& roi) const override { return classify_strategy(roi, spec_); }
  ClassSet classes() const override { return ClassSet::all(); }
  std::string name() const override { return spec_.describe(); }
  const StrategySpec& spec() const { return spec_; }

 private:
  StrategySpec spec_;
};

}  // namespace omr
