#include "omr/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "json.hpp"
#include "omr/error.hpp"

namespace omr {

namespace {

std::vector<Fold> split(const SampleRefs& samples, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::TooFewSamples, "k must be at least 2");
  std::map<std::pair<int, std::string>, std::vector<int>> groups;
  std::array<int, 3> class_counts{};
  for (const auto* s : samples) {
    if (s->augmented) continue;
    groups[{code(s->label), s->exam_id}].push_back(s->id);
    ++class_counts[class_index(s->label)];
  }
  for (AnswerClass c : kAllClasses) {
    const int n = class_counts[class_index(c)];
    if (n > 0 && n < k) {
      throw Error(ErrorCode::TooFewSamples, std::string(class_name(c)) + " has " + std::to_string(n) +
                                                " samples for " + std::to_string(k) + " folds");
    }
  }
  std::mt19937_64 rng(seed);
  std::unordered_map<int, int> fold_of;
  std::size_t offset = 0;
  for (auto& [key, ids] : groups) {
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < ids.size(); ++i) fold_of[ids[i]] = static_cast<int>((offset + i) % k);
    offset += ids.size();
  }
  std::vector<Fold> folds(k);
  for (const auto* s : samples) {
    const int owner = s->augmented ? s->source_id : s->id;
    const auto it = fold_of.find(owner);
    if (it == fold_of.end()) {
      throw Error(ErrorCode::ValidationError, "augmented sample " + std::to_string(s->id) + " has no source");
    }
    for (int f = 0; f < k; ++f) {
      if (f != it->second) {
        folds[f].train_ids.push_back(s->id);
      } else if (!s->augmented) {
        folds[f].test_ids.push_back(s->id);
      }
    }
  }
  return folds;
}

}  // namespace

std::vector<Fold> kfold_split(const std::vector<LabeledSample>& samples, int k, std::uint64_t seed) {
  return split(refs_of(samples), k, seed);
}

int ConfusionMatrix::total() const {
  int t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), 0);
  return t;
}

int ConfusionMatrix::row_total(AnswerClass c) const {
  const auto& row = counts[class_index(c)];
  return std::accumulate(row.begin(), row.end(), 0);
}

int ConfusionMatrix::column_total(AnswerClass c) const {
  int t = 0;
  for (const auto& row : counts) t += row[class_index(c)];
  return t;
}

double ConfusionMatrix::accuracy() const {
  const int n = total();
  if (n == 0) return 0.0;
  int hit = 0;
  for (int i = 0; i < 3; ++i) hit += counts[i][i];
  return static_cast<double>(hit) / n;
}

double ConfusionMatrix::balanced_accuracy() const {
  double sum = 0.0;
  int used = 0;
  for (AnswerClass c : classes.members()) {
    const int n = row_total(c);
    if (n == 0) continue;
    sum += static_cast<double>(counts[class_index(c)][class_index(c)]) / n;
    ++used;
  }
  return used > 0 ? sum / used : 0.0;
}

std::vector<ClassMetrics> class_metrics(const ConfusionMatrix& m) {
  std::vector<ClassMetrics> out;
  for (AnswerClass c : m.classes.members()) {
    ClassMetrics cm;
    cm.cls = c;
    cm.support = m.row_total(c);
    const int tp = m.counts[class_index(c)][class_index(c)];
    const int predicted = m.column_total(c);
    cm.precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
    cm.recall = cm.support > 0 ? static_cast<double>(tp) / cm.support : 0.0;
    cm.f = cm.precision + cm.recall > 0.0 ? 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall) : 0.0;
    out.push_back(cm);
  }
  return out;
}

EvalOutcome evaluate_classifier(const std::vector<LabeledSample>& samples, const std::string& name,
                                const Trainer& trainer, char subset, int k, std::uint64_t seed) {
  const auto classes = ClassSet::from_subset(subset);
  if (!classes) throw Error(ErrorCode::ConfigInvalid, std::string("unknown class subset ") + subset);
  SampleRefs in_scope;
  std::unordered_map<int, const LabeledSample*> by_id;
  for (const auto& s : samples) {
    if (!classes->contains(s.label)) continue;
    in_scope.push_back(&s);
    by_id[s.id] = &s;
  }
  const auto folds = split(in_scope, k, seed);

  EvalOutcome out;
  EvalReport& r = out.report;
  r.classifier = name;
  r.subset = subset;
  r.k = k;
  r.seed = seed;
  r.confusion.classes = *classes;
  for (int f = 0; f < k; ++f) {
    SampleRefs train;
    for (int id : folds[f].train_ids) train.push_back(by_id.at(id));
    ClassifierPtr model = trainer(train, *classes, f);
    const auto& test_ids = folds[f].test_ids;
    std::vector<AnswerClass> predicted(test_ids.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(test_ids.size()); ++i) {
      predicted[i] = model->classify(by_id.at(test_ids[i])->roi.pixels).predicted;
    }
    FoldResult fr;
    fr.train_size = static_cast<int>(train.size());
    fr.test_size = static_cast<int>(test_ids.size());
    fr.confusion.classes = *classes;
    for (std::size_t i = 0; i < test_ids.size(); ++i) {
      fr.confusion.add(by_id.at(test_ids[i])->label, predicted[i]);
      r.confusion.add(by_id.at(test_ids[i])->label, predicted[i]);
    }
    fr.accuracy = fr.confusion.accuracy();
    fr.balanced_accuracy = fr.confusion.balanced_accuracy();
    if (f == 0 || fr.accuracy > r.folds[r.best_fold].accuracy) {
      r.best_fold = f;
      out.best_model = model;
    }
    r.folds.push_back(fr);
  }
  for (const auto& fr : r.folds) {
    r.mean_accuracy += fr.accuracy / k;
    r.mean_balanced_accuracy += fr.balanced_accuracy / k;
  }
  r.metrics = class_metrics(r.confusion);
  return out;
}

Trainer model_trainer(const ClassifierConfig& config, FeatureCache* cache) {
  return [config, cache](const SampleRefs& train, const ClassSet& classes, int fold) -> ClassifierPtr {
    ClassifierConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(fold);
    return make_classifier(train_model(train, classes, c, cache));
  };
}

GradingAccuracy grading_accuracy(const std::vector<SheetGrade>& graded, const std::vector<SheetTruth>& truth) {
  if (graded.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(graded.size()) + " graded sheets vs " +
                                               std::to_string(truth.size()) + " truths");
  }
  std::size_t questions = 0, right = 0, sheets_right = 0;
  for (std::size_t s = 0; s < graded.size(); ++s) {
    const auto& g = graded[s].questions;
    const auto& t = truth[s].awarded;
    if (g.size() != t.size()) {
      throw Error(ErrorCode::LengthMismatch, "sheet " + std::to_string(s) + " has " + std::to_string(g.size()) +
                                                 " graded questions vs " + std::to_string(t.size()));
    }
    std::size_t sheet_right = 0;
    for (std::size_t q = 0; q < g.size(); ++q) sheet_right += g[q].awarded == t[q];
    questions += g.size();
    right += sheet_right;
    sheets_right += sheet_right == g.size();
  }
  GradingAccuracy a;
  if (questions > 0) a.question_based = static_cast<double>(right) / static_cast<double>(questions);
  if (!graded.empty()) a.sheet_based = static_cast<double>(sheets_right) / static_cast<double>(graded.size());
  return a;
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_accuracy_table(const std::vector<EvalReport>& reports) {
  std::vector<std::string> rows;
  std::map<std::string, std::map<char, double>> cells;
  for (const auto& r : reports) {
    const std::string row = r.classifier + (r.strategy == "SF" ? "" : " (" + r.strategy + ")");
    if (!cells.contains(row)) rows.push_back(row);
    cells[row][r.subset] = r.mean_accuracy;
  }
  std::size_t width = 12;
  for (const auto& row : rows) width = std::max(width, row.size() + 2);
  std::string out = pad_right("classifier", width);
  for (char s : {'a', 'b', 'c', 'd'}) out += pad_right(std::string("(") + s + ")", 9);
  out += "\n";
  for (const auto& row : rows) {
    out += pad_right(row, width);
    for (char s : {'a', 'b', 'c', 'd'}) {
      const auto it = cells[row].find(s);
      out += pad_right(it == cells[row].end() ? "-" : fixed(it->second), 9);
    }
    out += "\n";
  }
  return out;
}

std::string render_report(const EvalReport& r) {
  std::string out = r.classifier + " " + r.strategy + " subset (" + r.subset + "), " + std::to_string(r.k) +
                    "-fold, seed " + std::to_string(r.seed) + "\n";
  for (std::size_t f = 0; f < r.folds.size(); ++f) {
    out += "  fold " + std::to_string(f) + ": accuracy " + fixed(r.folds[f].accuracy) + " (train " +
           std::to_string(r.folds[f].train_size) + ", test " + std::to_string(r.folds[f].test_size) + ")\n";
  }
  out += "  mean accuracy " + fixed(r.mean_accuracy) + ", balanced " + fixed(r.mean_balanced_accuracy) +
         ", best fold " + std::to_string(r.best_fold) + "\n";
  const auto members = r.confusion.classes.members();
  out += "  confusion (rows true, columns predicted):";
  for (AnswerClass c : members) out += " " + std::string(class_name(c));
  out += "\n";
  for (AnswerClass t : members) {
    out += "    " + pad_right(std::string(class_name(t)), 12);
    for (AnswerClass p : members) out += pad_right(std::to_string(r.confusion.counts[class_index(t)][class_index(p)]), 8);
    out += "\n";
  }
  for (const auto& m : r.metrics) {
    out += "  " + pad_right(std::string(class_name(m.cls)), 12) + "precision " + fixed(m.precision) + "  recall " +
           fixed(m.recall) + "  F " + fixed(m.f) + "  support " + std::to_string(m.support) + "\n";
  }
  return out;
}

std::string report_json(const std::vector<EvalReport>& reports) {
  using nlohmann::ordered_json;
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) {
    ordered_json j;
    j["classifier"] = r.classifier;
    j["strategy"] = r.strategy;
    j["subset"] = std::string(1, r.subset);
    j["k"] = r.k;
    j["seed"] = r.seed;
    ordered_json folds = ordered_json::array();
    for (const auto& f : r.folds) {
      folds.push_back({{"accuracy", f.accuracy},
                       {"balanced_accuracy", f.balanced_accuracy},
                       {"train_size", f.train_size},
                       {"test_size", f.test_size}});
    }
    j["folds"] = folds;
    j["mean_accuracy"] = r.mean_accuracy;
    j["mean_balanced_accuracy"] = r.mean_balanced_accuracy;
    j["best_fold"] = r.best_fold;
    ordered_json confusion = ordered_json::object();
    for (AnswerClass t : r.confusion.classes.members()) {
      ordered_json row = ordered_json::object();
      for (AnswerClass p : r.confusion.classes.members())
        row[std::string(class_name(p))] = r.confusion.counts[class_index(t)][class_index(p)];
      confusion[std::string(class_name(t))] = row;
    }
    j["confusion"] = confusion;
    ordered_json metrics = ordered_json::object();
    for (const auto& m : r.metrics) {
      metrics[std::string(class_name(m.cls))] = {
          {"precision", m.precision}, {"recall", m.recall}, {"f", m.f}, {"support", m.support}};
    }
    j["metrics"] = metrics;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace omr
