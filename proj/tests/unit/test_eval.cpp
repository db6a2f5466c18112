#include "doctest.h"

#include <map>
#include <random>
#include <set>

#include "omr/error.hpp"
#include "omr/eval.hpp"
#include "unit/fixtures.hpp"

using namespace omr;

namespace {

using enum AnswerClass;

// The label is encoded in the pixel value so stubs can be perfect.
LabeledSample tagged(int id, AnswerClass label, const std::string& exam = "e0") {
  LabeledSample s;
  s.id = id;
  s.label = label;
  s.exam_id = exam;
  s.roi.pixels = ColorImage(2, 2, 50.0f * static_cast<float>(code(label)));
  return s;
}

AnswerClass decode(const ColorImage& roi) { return *class_from_code(static_cast<int>(roi.at(0, 0) / 50.0f + 0.5f)); }

class FnClassifier : public Classifier {
 public:
  FnClassifier(ClassSet classes, std::function<AnswerClass(const ColorImage&)> fn) : classes_(classes), fn_(std::move(fn)) {}
  ClassScores classify(const ColorImage& roi) const override {
    ClassScores s;
    s.predicted = fn_(roi);
    s.confidence = 1.0;
    s.scores[class_index(s.predicted)] = 1.0;
    return s;
  }
  ClassSet classes() const override { return classes_; }
  std::string name() const override { return "fn"; }

 private:
  ClassSet classes_;
  std::function<AnswerClass(const ColorImage&)> fn_;
};

Trainer perfect_trainer() {
  return [](const SampleRefs&, const ClassSet& classes, int) { return std::make_shared<FnClassifier>(classes, decode); };
}

Trainer majority_trainer() {
  return [](const SampleRefs& train, const ClassSet& classes, int) {
    std::map<AnswerClass, int> n;
    for (const LabeledSample* s : train) ++n[s->label];
    const AnswerClass top = std::max_element(n.begin(), n.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
    return std::make_shared<FnClassifier>(classes, [top](const ColorImage&) { return top; });
  };
}

std::vector<LabeledSample> hundred() {
  std::vector<LabeledSample> s;
  for (int i = 0; i < 100; ++i) s.push_back(tagged(i, i < 50 ? Empty : i < 80 ? Confirmed : CrossedOut, i % 2 ? "e1" : "e0"));
  return s;
}

SheetGrade graded(const std::vector<double>& awarded) {
  SheetGrade g;
  for (std::size_t q = 0; q < awarded.size(); ++q) {
    QuestionResult r;
    r.question_index = static_cast<int>(q);
    r.awarded = awarded[q];
    g.questions.push_back(r);
    g.total += awarded[q];
  }
  return g;
}

}  // namespace

TEST_CASE("k-fold split sizes and stratification") {
  const auto samples = hundred();
  const auto folds = kfold_split(samples, 5, 7);
  REQUIRE(folds.size() == 5);
  std::multiset<int> tested;
  for (const Fold& f : folds) {
    CHECK(std::abs(static_cast<int>(f.test_ids.size()) - 20) <= 1);
    CHECK(f.train_ids.size() + f.test_ids.size() == 100);
    std::map<AnswerClass, int> per_class;
    for (int id : f.test_ids) {
      ++per_class[samples[id].label];
      tested.insert(id);
    }
    CHECK(std::abs(per_class[Empty] - 10) <= 1);
    CHECK(std::abs(per_class[Confirmed] - 6) <= 1);
    CHECK(std::abs(per_class[CrossedOut] - 4) <= 1);
    const std::set<int> train(f.train_ids.begin(), f.train_ids.end());
    for (int id : f.test_ids) CHECK(train.count(id) == 0);
  }
  CHECK(tested.size() == 100);
  CHECK(std::set<int>(tested.begin(), tested.end()).size() == 100);
}

TEST_CASE("k-fold split keeps augmented samples with their source, train only") {
  auto samples = hundred();
  for (int i = 80; i < 100; ++i)
    for (int v = 0; v < 3; ++v) {
      LabeledSample a = tagged(static_cast<int>(samples.size()), CrossedOut);
      a.augmented = true;
      a.source_id = i;
      samples.push_back(a);
    }
  const auto folds = kfold_split(samples, 5, 3);
  std::map<int, int> fold_of;
  for (int f = 0; f < 5; ++f)
    for (int id : folds[f].test_ids) fold_of[id] = f;
  for (int f = 0; f < 5; ++f) {
    for (int id : folds[f].test_ids) CHECK_FALSE(samples[id].augmented);
    const std::set<int> train(folds[f].train_ids.begin(), folds[f].train_ids.end());
    for (const auto& s : samples) {
      if (!s.augmented) continue;
      // A variant trains exactly in the folds where its source trains.
      CHECK(train.count(s.id) == (fold_of.at(s.source_id) != f ? 1u : 0u));
    }
  }
  for (const auto& s : samples)
    if (!s.augmented) CHECK(fold_of.count(s.id) == 1);

  const auto again = kfold_split(samples, 5, 3);
  for (int f = 0; f < 5; ++f) {
    CHECK(again[f].test_ids == folds[f].test_ids);
    CHECK(again[f].train_ids == folds[f].train_ids);
  }
  const auto other = kfold_split(samples, 5, 4);
  bool differs = false;
  for (int f = 0; f < 5; ++f) differs |= other[f].test_ids != folds[f].test_ids;
  CHECK(differs);

  samples.push_back(tagged(static_cast<int>(samples.size()), CrossedOut));
  samples.back().augmented = true;
  samples.back().source_id = 999;
  CHECK_THROWS_AS(kfold_split(samples, 5, 3), Error);
}

TEST_CASE("k-fold split needs k samples per class") {
  std::vector<LabeledSample> s;
  for (int i = 0; i < 20; ++i) s.push_back(tagged(i, i < 4 ? CrossedOut : Empty));
  try {
    kfold_split(s, 5, 0);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
  CHECK_NOTHROW(kfold_split(s, 4, 0));
}

TEST_CASE("perfect stub scores 1") {
  const auto samples = hundred();
  for (char subset : {'a', 'b', 'c', 'd'}) {
    const EvalOutcome out = evaluate_classifier(samples, "perfect", perfect_trainer(), subset, 5, 1);
    CHECK(out.report.mean_accuracy == 1.0);
    CHECK(out.report.mean_balanced_accuracy == 1.0);
    CHECK(out.report.subset == subset);
    for (const auto& m : out.report.metrics) CHECK(m.f == 1.0);
    CHECK(out.best_model != nullptr);
    CHECK(out.report.best_fold == 0);
  }
}

TEST_CASE("majority stub on an 80/20 set") {
  std::vector<LabeledSample> s;
  for (int i = 0; i < 100; ++i) s.push_back(tagged(i, i < 80 ? Empty : Confirmed));
  const EvalOutcome out = evaluate_classifier(s, "majority", majority_trainer(), 'b', 5, 2);
  CHECK(out.report.mean_accuracy == doctest::Approx(0.8));
  CHECK(out.report.mean_balanced_accuracy == doctest::Approx(0.5));
  for (const auto& m : out.report.metrics) {
    if (m.cls == Confirmed) {
      CHECK(m.recall == 0.0);
      CHECK(m.f == 0.0);
      CHECK(m.support == 20);
    }
  }
}

TEST_CASE("metrics match an independent recount") {
  const auto samples = fixtures::samples(fixtures::balanced(4, 61));
  ClassifierConfig c;
  FeatureCache cache;
  const EvalOutcome out = evaluate_classifier(samples, "nbc", model_trainer(c, &cache), 'a', 5, 3);
  const EvalReport& r = out.report;
  REQUIRE(r.folds.size() == 5);

  const auto folds = kfold_split(samples, 5, 3);
  ClassifierConfig same = c;
  std::map<AnswerClass, int> tp, fp, fn, support;
  int hits = 0, n = 0;
  double fold_sum = 0.0;
  for (int f = 0; f < 5; ++f) {
    SampleRefs train;
    for (int id : folds[f].train_ids) train.push_back(&samples[id]);
    same.seed = c.seed + static_cast<std::uint64_t>(f);
    const TrainedModel m = train_model(train, ClassSet::all(), same);
    int fold_hits = 0;
    for (int id : folds[f].test_ids) {
      const AnswerClass truth = samples[id].label;
      const AnswerClass pred = m.classify(samples[id].roi.pixels).predicted;
      ++support[truth];
      if (truth == pred) {
        ++tp[truth];
        ++fold_hits;
      } else {
        ++fp[pred];
        ++fn[truth];
      }
    }
    hits += fold_hits;
    n += static_cast<int>(folds[f].test_ids.size());
    fold_sum += static_cast<double>(fold_hits) / folds[f].test_ids.size();
    CHECK(r.folds[f].accuracy == doctest::Approx(static_cast<double>(fold_hits) / folds[f].test_ids.size()));
    CHECK(r.folds[f].test_size == static_cast<int>(folds[f].test_ids.size()));
  }
  CHECK(r.mean_accuracy == doctest::Approx(fold_sum / 5));
  CHECK(r.confusion.total() == n);
  CHECK(r.confusion.accuracy() == doctest::Approx(static_cast<double>(hits) / n));
  for (const auto& m : r.metrics) {
    CHECK(r.confusion.row_total(m.cls) == support[m.cls]);
    CHECK(m.support == support[m.cls]);
    const double p = tp[m.cls] + fp[m.cls] ? static_cast<double>(tp[m.cls]) / (tp[m.cls] + fp[m.cls]) : 0.0;
    const double rc = static_cast<double>(tp[m.cls]) / support[m.cls];
    CHECK(m.precision == doctest::Approx(p));
    CHECK(m.recall == doctest::Approx(rc));
    CHECK(m.f == doctest::Approx(p + rc > 0 ? 2 * p * rc / (p + rc) : 0.0));
  }
  double best = 0.0;
  for (const auto& f : r.folds) best = std::max(best, f.accuracy);
  CHECK(r.folds[r.best_fold].accuracy == best);
}

TEST_CASE("a reloaded model reproduces the report") {
  const auto samples = fixtures::samples(fixtures::balanced(3, 62));
  ClassifierConfig c;
  FeatureCache a_cache, b_cache;
  const Trainer direct = model_trainer(c, &a_cache);
  const Trainer inner = model_trainer(c, &b_cache);
  const Trainer reloaded = [&inner](const SampleRefs& train, const ClassSet& classes, int fold) {
    const auto* model = dynamic_cast<const ModelClassifier*>(inner(train, classes, fold).get());
    REQUIRE(model != nullptr);
    return make_classifier(deserialize_model(serialize_model(model->model())));
  };
  const EvalOutcome a = evaluate_classifier(samples, "nbc", direct, 'a', 5, 4);
  const EvalOutcome b = evaluate_classifier(samples, "nbc", reloaded, 'a', 5, 4);
  CHECK(report_json({a.report}) == report_json({b.report}));
  CHECK(render_report(a.report) == render_report(b.report));
}

TEST_CASE("mean-intensity baseline is near chance on confirmed vs crossed out") {
  const auto samples = fixtures::samples(fixtures::balanced(8, 63));
  ClassifierConfig c;
  c.kind = ModelKind::Baseline;
  FeatureCache cache;
  const EvalOutcome out = evaluate_classifier(samples, "baseline", model_trainer(c, &cache), 'c', 5, 5);
  CHECK(out.report.mean_accuracy < 0.65);
}

TEST_CASE("grading accuracy") {
  std::vector<SheetGrade> g;
  std::vector<SheetTruth> t;
  for (int s = 0; s < 10; ++s) {
    std::vector<double> awarded(10);
    for (int q = 0; q < 10; ++q) awarded[q] = (s + q) % 3 == 0 ? 1.0 : 0.0;
    g.push_back(graded(awarded));
    t.push_back({awarded});
  }
  GradingAccuracy a = grading_accuracy(g, t);
  CHECK(a.question_based == 1.0);
  CHECK(a.sheet_based == 1.0);

  g[4].questions[7].awarded = 1.0 - g[4].questions[7].awarded;
  a = grading_accuracy(g, t);
  CHECK(a.question_based == doctest::Approx(0.99));
  CHECK(a.sheet_based == doctest::Approx(0.9));

  std::mt19937_64 rng(5);
  std::bernoulli_distribution flip(0.05);
  for (int trial = 0; trial < 100; ++trial) {
    auto noisy = g;
    for (auto& s : noisy)
      for (auto& q : s.questions)
        if (flip(rng)) q.awarded = 1.0 - q.awarded;
    const GradingAccuracy r = grading_accuracy(noisy, t);
    CHECK(r.sheet_based <= r.question_based);
  }

  auto short_truth = t;
  short_truth.pop_back();
  CHECK_THROWS_AS(grading_accuracy(g, short_truth), Error);
  short_truth = t;
  short_truth[0].awarded.pop_back();
  try {
    grading_accuracy(g, short_truth);
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::LengthMismatch);
  }
}

TEST_CASE("accuracy table layout") {
  EvalReport nbc;
  nbc.classifier = "NBC";
  nbc.subset = 'a';
  nbc.mean_accuracy = 0.9;
  EvalReport nbc_b = nbc;
  nbc_b.subset = 'b';
  nbc_b.mean_accuracy = 0.95;
  const std::string table = render_accuracy_table({nbc, nbc_b});
  CHECK(table.find("NBC") != std::string::npos);
  CHECK(table.find("0.9000") != std::string::npos);
  CHECK(table.find("0.9500") != std::string::npos);
  CHECK(table.find("(a)") != std::string::npos);
  CHECK(table.find("(d)") != std::string::npos);
}
