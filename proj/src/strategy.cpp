#include "omr/strategy.hpp"

#include "omr/error.hpp"

namespace omr {

StrategySpec StrategySpec::straight(ClassifierPtr model) {
  return StrategySpec{StrategyKind::StraightForward, std::move(model), nullptr};
}

StrategySpec StrategySpec::two_stage(ClassifierPtr filled_vs_empty, ClassifierPtr confirmed_vs_crossed) {
  return StrategySpec{StrategyKind::TwoStage, std::move(filled_vs_empty), std::move(confirmed_vs_crossed)};
}

void StrategySpec::validate() const {
  if (!stage1) throw Error(ErrorCode::SpecInvalid, "stage 1 model missing");
  if (kind == StrategyKind::StraightForward) {
    if (stage2) throw Error(ErrorCode::SpecInvalid, "a straight-forward strategy takes a single model");
    if (!(stage1->classes() == ClassSet::all())) {
      throw Error(ErrorCode::SpecInvalid, "straight-forward model must be trained on all three classes");
    }
    return;
  }
  if (!stage2) throw Error(ErrorCode::SpecInvalid, "two-stage strategy needs a stage 2 model");
  if (!(stage1->classes() == ClassSet{AnswerClass::Confirmed, AnswerClass::Empty})) {
    throw Error(ErrorCode::SpecInvalid, "stage 1 must be trained on confirmed and empty");
  }
  if (!(stage2->classes() == ClassSet{AnswerClass::Confirmed, AnswerClass::CrossedOut})) {
    throw Error(ErrorCode::SpecInvalid, "stage 2 must be trained on confirmed and crossed out");
  }
}

std::string StrategySpec::describe() const {
  if (kind == StrategyKind::StraightForward) return (stage1 ? stage1->name() : "?") + " (SF)";
  return (stage1 ? stage1->name() : "?") + "-" + (stage2 ? stage2->name() : "?") + " (2S)";
}

ClassScores classify_strategy(const ColorImage& roi, const StrategySpec& spec) {
  spec.validate();
  const ClassScores first = spec.stage1->classify(roi);
  if (spec.kind == StrategyKind::StraightForward || first.predicted == AnswerClass::Empty) return first;
  return spec.stage2->classify(roi);
}

}  // namespace omr
