#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "omr/classifiers.hpp"
#include "omr/dataset.hpp"
#include "omr/error.hpp"
#include "omr/eval.hpp"
#include "omr/grading.hpp"
#include "omr/metadata.hpp"
#include "omr/pipeline.hpp"
#include "omr/png_io.hpp"
#include "omr/report.hpp"
#include "omr/service.hpp"
#include "omr/strategy.hpp"

namespace fs = std::filesystem;
using namespace omr;

namespace {

struct DataPaths {
  std::string data;
  std::vector<std::string> reference;
  std::string metadata;
  std::string labels;
  std::string sheets;

  void add_to(CLI::App* cmd, bool with_labels) {
    cmd->add_option("--data", data, "Exam directory (reference.png, metadata.json, labels.csv, sheets/)")
        ->envname("OMR_DATA_ROOT");
    cmd->add_option("--reference", reference, "Reference page images, one per page");
    cmd->add_option("--metadata", metadata, "Exam metadata JSON");
    if (with_labels) cmd->add_option("--labels", labels, "Ground-truth labels CSV");
    cmd->add_option("--sheets", sheets, "Directory of answer-sheet images");
  }

  void resolve() {
    const fs::path root = data;
    if (reference.empty()) reference.push_back((root / "reference.png").string());
    if (metadata.empty()) metadata = (root / "metadata.json").string();
    if (labels.empty()) labels = (root / "labels.csv").string();
    if (sheets.empty()) sheets = (root / "sheets").string();
  }
};

struct ModelOptions {
  std::string cnn = "desk";
  int epochs = 0;
  int vocabulary_size = 200;
  int vocabulary_iterations = 300;
  std::size_t max_vocabulary_descriptors = 0;
  double threshold = 0.5;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--cnn", cnn, "CNN geometry")->check(CLI::IsMember({"desk", "compact", "alexnet"}));
    cmd->add_option("--epochs", epochs, "CNN epochs (0 keeps the geometry default)");
    cmd->add_option("--vocabulary-size", vocabulary_size, "BoVW vocabulary size");
    cmd->add_option("--vocabulary-iterations", vocabulary_iterations, "k-means iteration cap");
    cmd->add_option("--max-vocabulary-descriptors", max_vocabulary_descriptors,
                    "Descriptors sampled for the vocabulary (0 = all)");
    cmd->add_option("--threshold", threshold, "Black-pixel fraction of the Otsu baseline");
  }

  ClassifierConfig config(ModelKind kind, std::uint64_t seed) const {
    ClassifierConfig c;
    c.kind = kind;
    c.seed = seed;
    c.threshold = threshold;
    c.vocabulary_size = vocabulary_size;
    c.vocabulary_iterations = vocabulary_iterations;
    c.max_vocabulary_descriptors = max_vocabulary_descriptors;
    c.cnn = cnn == "compact" ? CnnConfig::compact() : cnn == "alexnet" ? CnnConfig::alexnet() : CnnConfig::desk();
    if (epochs > 0) c.cnn.epochs = epochs;
    return c;
  }
};

ModelKind parse_kind(const std::string& name) {
  const auto kind = model_kind_from_name(name);
  if (!kind) throw Error(ErrorCode::ConfigInvalid, "unknown classifier '" + name + "'");
  return *kind;
}

StrategyKind parse_strategy(const std::string& name) {
  if (name == "SF") return StrategyKind::StraightForward;
  if (name == "2S") return StrategyKind::TwoStage;
  throw Error(ErrorCode::SpecInvalid, "strategy must be SF or 2S, got '" + name + "'");
}

struct Dataset {
  ReferenceSheet reference;
  ExamMetadata metadata;
  LabelTable labels;
  std::vector<RegisteredSheet> sheets;
  std::vector<LabeledSample> samples;
};

std::vector<ColorImage> load_pages(const std::vector<std::string>& files) {
  std::vector<ColorImage> pages;
  for (const auto& f : files) pages.push_back(read_png(f));
  return pages;
}

Dataset load_dataset(DataPaths paths, const RegistrationConfig& registration, int concurrency, bool augment) {
  paths.resolve();
  Dataset d;
  d.metadata = load_metadata(paths.metadata);
  d.labels = load_labels(paths.labels);
  d.reference = ReferenceSheet::prepare(load_pages(paths.reference), registration.detector);
  const auto sources = discover_sheets(paths.sheets, d.metadata.pages);
  RegisteredBatch batch = register_sheets(sources, d.reference, registration, concurrency);
  for (const auto& f : batch.failures) std::cerr << "skipped " << f.sheet_id << ": " << f.message << "\n";
  d.sheets = std::move(batch.sheets);
  d.samples = labeled_samples(d.sheets, d.metadata, d.labels);
  if (augment) append_augmented(d.samples);
  return d;
}

int cmd_synth(const std::string& out, SynthConfig config, const std::vector<double>& mixture) {
  if (!mixture.empty()) {
    if (mixture.size() != 3) throw Error(ErrorCode::ConfigInvalid, "--mixture takes confirmed,crossed_out,empty");
    config.mixture = {mixture[0], mixture[1], mixture[2]};
  }
  const SyntheticExam exam = generate_synthetic_exam(config);
  write_synthetic_exam(out, exam);
  std::cout << "wrote " << exam.sheets.size() << " sheets to " << out << "\n";
  return 0;
}

struct TrainArgs {
  DataPaths paths;
  ModelOptions model;
  std::string strategy = "SF";
  std::string classifier = "bovw";
  std::string stage2;
  std::string subset;
  std::string out = "models";
  std::uint64_t seed = 0;
  int concurrency = 1;
  bool no_augment = false;
};

int cmd_train(const TrainArgs& a) {
  const ModelKind first = parse_kind(a.classifier);
  const bool standalone = a.strategy == "none";
  const StrategyKind kind = standalone ? StrategyKind::StraightForward : parse_strategy(a.strategy);
  char subset = 'a';
  if (!a.subset.empty()) {
    if (a.subset.size() != 1 || !ClassSet::from_subset(a.subset[0])) {
      throw Error(ErrorCode::ConfigInvalid, "subset must be one of a, b, c, d");
    }
    subset = a.subset[0];
    if (!standalone && (kind == StrategyKind::TwoStage || subset != 'a')) {
      throw Error(ErrorCode::SpecInvalid, kind == StrategyKind::TwoStage
                                              ? "a two-stage strategy fixes its subsets to (b) and (c)"
                                              : "a straight-forward strategy needs subset (a)");
    }
  }
  const ModelKind second = a.stage2.empty() ? first : parse_kind(a.stage2);
  Dataset d = load_dataset(a.paths, RegistrationConfig{}, a.concurrency, !a.no_augment);
  const SampleRefs refs = refs_of(d.samples);
  FeatureCache cache;
  fs::create_directories(a.out);
  auto train_one = [&](ModelKind k, char s) {
    const TrainedModel model = train_model(refs, *ClassSet::from_subset(s), a.model.config(k, a.seed), &cache);
    const std::string name = model_file_name(k, s);
    save_model(fs::path(a.out) / name, model);
    std::cout << "trained " << name << " on " << refs.size() << " samples\n";
    return name;
  };
  StrategyFile file;
  file.kind = kind;
  if (kind == StrategyKind::TwoStage) {
    file.stage1 = train_one(first, 'b');
    file.stage2 = train_one(second, 'c');
  } else {
    file.stage1 = train_one(first, subset);
  }
  if (!standalone) {
    write_text(fs::path(a.out) / "strategy.json", format_strategy_file(file));
    load_strategy(fs::path(a.out) / "strategy.json");
    std::cout << "wrote strategy.json\n";
  }
  return 0;
}

struct GradeArgs {
  DataPaths paths;
  std::string models = "models";
  std::string strategy_file = "strategy.json";
  std::string out = "report";
  std::vector<std::string> formats{"csv", "xml"};
  double review_threshold = 0.6;
  int concurrency = 1;
  bool details = false;
};

int cmd_grade(GradeArgs a) {
  a.paths.resolve();
  const ExamMetadata metadata = load_metadata(a.paths.metadata);
  const StrategySpec spec = load_strategy(fs::path(a.models) / a.strategy_file);
  BatchConfig config;
  config.grading.review_threshold = a.review_threshold;
  config.concurrency = a.concurrency;
  const ReferenceSheet reference = ReferenceSheet::prepare(load_pages(a.paths.reference), config.registration.detector);
  const auto sources = discover_sheets(a.paths.sheets, metadata.pages);
  const BatchResult result = grade_batch(sources, reference, metadata, spec, config);
  std::vector<SheetGrade> graded;
  for (const auto& s : result.sheets)
    if (s.grade) graded.push_back(*s.grade);
  auto rows = report_rows(graded);
  // Single-page sheets are reported by their image file name.
  std::map<std::string, std::string> file_names;
  for (const auto& s : sources)
    if (s.page_files.size() == 1) file_names[s.id] = s.page_files.front().filename().string();
  for (auto& r : rows)
    if (file_names.count(r.image)) r.image = file_names[r.image];
  fs::create_directories(a.out);
  for (const auto& f : a.formats) {
    if (f == "csv") {
      write_csv(fs::path(a.out) / "report.csv", rows);
    } else if (f == "xml") {
      write_xml(fs::path(a.out) / "report.xml", rows);
    } else {
      throw Error(ErrorCode::ConfigInvalid, "unknown report format '" + f + "'");
    }
  }
  if (a.details) write_text(fs::path(a.out) / "grades.json", batch_json(result).dump(2) + "\n");
  std::cout << "graded " << result.report.graded << " of " << result.sheets.size() << " sheets with "
            << spec.describe() << "\n";
  for (const auto& f : result.report.failures) std::cerr << "failed " << f.sheet_id << ": " << f.message << "\n";
  return result.report.failures.empty() ? 0 : 2;
}

struct EvalArgs {
  DataPaths paths;
  ModelOptions model;
  std::string strategy = "SF";
  std::string classifier = "bovw";
  std::string stage2;
  std::string subsets = "abcd";
  int k = 5;
  std::uint64_t seed = 0;
  int concurrency = 1;
  bool no_augment = false;
  bool grade = false;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const StrategyKind kind = parse_strategy(a.strategy);
  Dataset d = load_dataset(a.paths, RegistrationConfig{}, a.concurrency, !a.no_augment);
  FeatureCache cache;
  const bool oracle = a.classifier == "oracle";
  Trainer trainer;
  std::string name = a.classifier;
  if (oracle) {
    if (kind != StrategyKind::StraightForward) throw Error(ErrorCode::SpecInvalid, "the oracle runs straight-forward");
    trainer = [&d](const SampleRefs&, const ClassSet& classes, int) -> ClassifierPtr {
      return std::make_shared<OracleClassifier>(d.samples, classes);
    };
  } else {
    const ModelKind first = parse_kind(a.classifier);
    const ModelKind second = a.stage2.empty() ? first : parse_kind(a.stage2);
    if (kind == StrategyKind::TwoStage) name += "-" + std::string(model_kind_name(second));
    trainer = strategy_trainer(kind, a.model.config(first, a.seed), a.model.config(second, a.seed), &cache);
  }
  std::vector<EvalReport> reports;
  ClassifierPtr grading_model;
  for (char s : a.subsets) {
    if (kind == StrategyKind::TwoStage && s != 'a') {
      throw Error(ErrorCode::SpecInvalid, "a two-stage strategy is evaluated on subset (a) only");
    }
    EvalOutcome outcome = evaluate_classifier(d.samples, name, trainer, s, a.k, a.seed);
    outcome.report.strategy = a.strategy;
    if (s == 'a') grading_model = outcome.best_model;
    reports.push_back(std::move(outcome.report));
  }
  std::string text = render_accuracy_table(reports);
  for (const auto& r : reports) text += "\n" + render_report(r);
  nlohmann::ordered_json grading;
  if (a.grade) {
    if (!grading_model) throw Error(ErrorCode::ConfigInvalid, "grading needs subset (a) in --subsets");
    const StrategySpec spec = StrategySpec::straight(grading_model);
    std::vector<SheetGrade> graded;
    std::vector<SheetTruth> truth;
    for (const auto& sheet : d.sheets) {
      SheetGrade g = grade_sheet(sheet.pages, d.metadata, spec);
      g.sheet_id = sheet.id;
      graded.push_back(std::move(g));
      truth.push_back(sheet_truth(sheet.id, d.metadata, d.labels));
    }
    const GradingAccuracy acc = grading_accuracy(graded, truth);
    char line[128];
    std::snprintf(line, sizeof line, "\ngrading with best fold: question-based %.4f, sheet-based %.4f\n",
                  acc.question_based, acc.sheet_based);
    text += line;
    grading = {{"question_based", acc.question_based}, {"sheet_based", acc.sheet_based}};
  }
  std::cout << text;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "eval.txt", text);
    write_text(fs::path(a.out) / "eval.json", report_json(reports));
    if (a.grade) write_text(fs::path(a.out) / "grading.json", grading.dump(2) + "\n");
  }
  return 0;
}

struct ServeArgs {
  DataPaths paths;
  std::string models = "models";
  std::string host = "127.0.0.1";
  int port = 8080;
  double review_threshold = 0.6;
  int concurrency = 1;
};

int cmd_serve(ServeArgs a) {
  a.paths.resolve();
  ServiceConfig config;
  for (const auto& r : a.paths.reference) config.reference_pages.push_back(r);
  config.metadata_path = a.paths.metadata;
  config.sheets_dir = a.paths.sheets;
  config.models_dir = a.models;
  config.grading.review_threshold = a.review_threshold;
  config.concurrency = a.concurrency;
  Service service(config);
  HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  std::cout << "listening on http://" << a.host << ":" << port << "/v1" << std::endl;
  server.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optical mark recognition toolkit"};
  app.require_subcommand(1);
  int status = 0;

  SynthConfig synth;
  std::string synth_out = "exam";
  std::vector<double> mixture;
  auto* s = app.add_subcommand("synth", "Generate a synthetic labelled exam");
  s->add_option("--out", synth_out, "Output directory");
  s->add_option("--seed", synth.seed);
  s->add_option("--exam-id", synth.exam_id);
  s->add_option("--sheets", synth.sheets);
  s->add_option("--first-sheet", synth.first_sheet);
  s->add_option("--questions", synth.questions);
  s->add_option("--choices", synth.choices);
  s->add_option("--mixture", mixture, "confirmed,crossed_out,empty")->delimiter(',');
  s->add_option("--noise", synth.noise_sigma, "Gaussian noise sigma");
  s->add_option("--max-rotation", synth.max_rotation_deg, "Degrees");
  s->add_option("--max-shift", synth.max_shift_px, "Pixels");
  s->add_flag("--perfect-key", synth.perfect_key, "Every sheet marks the key");
  s->callback([&] { status = cmd_synth(synth_out, synth, mixture); });

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the models of a grading strategy");
  train.paths.add_to(t, true);
  train.model.add_to(t);
  t->add_option("--strategy", train.strategy, "SF, 2S, or none for a single model");
  t->add_option("--classifier", train.classifier, "threshold, baseline, nbc, bovw or cnn (stage 1 under 2S)");
  t->add_option("--stage2", train.stage2, "Stage 2 classifier under 2S");
  t->add_option("--subset", train.subset, "Class subset a, b, c or d");
  t->add_option("--out", train.out, "Model directory");
  t->add_option("--seed", train.seed);
  t->add_option("--concurrency", train.concurrency);
  t->add_flag("--no-augment", train.no_augment, "Skip crossed-out augmentation");
  t->callback([&] { status = cmd_train(train); });

  GradeArgs grade;
  auto* g = app.add_subcommand("grade", "Grade a directory of answer sheets");
  grade.paths.add_to(g, false);
  g->add_option("--models", grade.models, "Directory holding strategy.json and the models");
  g->add_option("--strategy-file", grade.strategy_file, "Strategy file inside --models");
  g->add_option("--out", grade.out, "Report directory");
  g->add_option("--format", grade.formats, "csv and/or xml")->delimiter(',');
  g->add_option("--review-threshold", grade.review_threshold);
  g->add_option("--concurrency", grade.concurrency);
  g->add_flag("--details", grade.details, "Also write per-question grades.json");
  g->callback([&] { status = cmd_grade(grade); });

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Cross-validate a classifier on a labelled exam");
  eval.paths.add_to(e, true);
  eval.model.add_to(e);
  e->add_option("--strategy", eval.strategy, "SF or 2S");
  e->add_option("--classifier", eval.classifier, "threshold, baseline, nbc, bovw, cnn or oracle");
  e->add_option("--stage2", eval.stage2, "Stage 2 classifier under 2S");
  e->add_option("--subsets", eval.subsets, "Class subsets to evaluate, e.g. abcd");
  e->add_option("--k", eval.k, "Folds");
  e->add_option("--seed", eval.seed);
  e->add_option("--concurrency", eval.concurrency);
  e->add_flag("--no-augment", eval.no_augment, "Skip crossed-out augmentation");
  e->add_flag("--grade", eval.grade, "Grade the sheets with the best subset (a) model");
  e->add_option("--out", eval.out, "Directory for eval.txt and eval.json");
  e->callback([&] { status = cmd_eval(eval); });

  ServeArgs serve;
  auto* v = app.add_subcommand("serve", "Serve the /v1 HTTP API for one exam");
  serve.paths.add_to(v, false);
  v->add_option("--models", serve.models);
  v->add_option("--host", serve.host);
  v->add_option("--port", serve.port);
  v->add_option("--review-threshold", serve.review_threshold);
  v->add_option("--concurrency", serve.concurrency);
  v->callback([&] { status = cmd_serve(serve); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return status;
}
