#include "omr/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <map>

#include "json.hpp"
#include "omr/error.hpp"
#include "omr/png_io.hpp"

namespace omr {

namespace fs = std::filesystem;

std::vector<SheetSource> discover_sheets(const fs::path& dir, int pages) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir.string() + " is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SheetSource> out;
  if (pages <= 1) {
    for (const auto& f : files) out.push_back({f.stem().string(), {f}, {}});
    return out;
  }
  std::map<std::string, std::map<int, fs::path>> groups;
  for (const auto& f : files) {
    const std::string stem = f.stem().string();
    const auto cut = stem.rfind('_');
    int page = -1;
    if (cut != std::string::npos) {
      const char* first = stem.data() + cut + 1;
      const char* last = stem.data() + stem.size();
      const auto [ptr, ec] = std::from_chars(first, last, page);
      if (ec != std::errc() || ptr != last) page = -1;
    }
    if (page < 0) throw Error(ErrorCode::ValidationError, f.filename().string() + " has no _<page> suffix");
    groups[stem.substr(0, cut)][page] = f;
  }
  for (auto& [id, by_page] : groups) {
    SheetSource src{id, {}, {}};
    for (auto& [page, f] : by_page) src.page_files.push_back(f);
    out.push_back(std::move(src));
  }
  return out;
}

std::string page_image_name(const std::string& sheet_id, int page, int pages) {
  return pages <= 1 ? sheet_id : sheet_id + "_" + std::to_string(page);
}

RegisteredBatch register_sheets(const std::vector<SheetSource>& sources, const ReferenceSheet& reference,
                                const RegistrationConfig& config, int concurrency) {
  std::vector<std::optional<RegisteredSheet>> done(sources.size());
  std::vector<std::optional<SheetFailure>> failed(sources.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, concurrency))
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sources.size()); ++i) {
    const SheetSource& src = sources[i];
    try {
      std::vector<ColorImage> raw = src.page_images;
      if (raw.empty())
        for (const auto& f : src.page_files) raw.push_back(read_png(f));
      if (raw.size() != reference.pages.size()) {
        throw Error(ErrorCode::ValidationError, "sheet has " + std::to_string(raw.size()) + " pages, exam has " +
                                                    std::to_string(reference.pages.size()));
      }
      RegisteredSheet sheet{src.id, {}};
      for (std::size_t p = 0; p < raw.size(); ++p) {
        sheet.pages.push_back(
            register_sheet(raw[p], reference.features[p], reference.pages[p].size(), config).registered);
      }
      done[i] = std::move(sheet);
    } catch (const Error& e) {
      failed[i] = SheetFailure{src.id, std::string(e.name()), e.what()};
    }
  }
  RegisteredBatch out;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (done[i]) out.sheets.push_back(std::move(*done[i]));
    if (failed[i]) out.failures.push_back(std::move(*failed[i]));
  }
  return out;
}

std::vector<LabeledSample> labeled_samples(const std::vector<RegisteredSheet>& sheets, const ExamMetadata& metadata,
                                           const LabelTable& labels, int first_id) {
  std::vector<LabeledSample> out;
  int id = first_id;
  for (const auto& sheet : sheets) {
    for (int q = 0; q < static_cast<int>(metadata.questions.size()); ++q) {
      const int page = metadata.questions[q].page;
      const std::string key = page_image_name(sheet.id, page, metadata.pages);
      if (page >= static_cast<int>(sheet.pages.size())) {
        throw Error(ErrorCode::ValidationError, "question " + std::to_string(q) + " is on a missing page");
      }
      for (RoiImage& roi : extract_rois(sheet.pages[page], metadata, q)) {
        const auto label = labels.find(key, q, roi.source.choice_index);
        if (!label) {
          throw Error(ErrorCode::LabelMissing, key + " question " + std::to_string(q) + " choice " +
                                                   std::to_string(roi.source.choice_index));
        }
        LabeledSample s;
        s.roi = std::move(roi);
        s.label = *label;
        s.exam_id = metadata.exam_id;
        s.image_name = key;
        s.id = id++;
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

SheetTruth sheet_truth(const std::string& sheet_id, const ExamMetadata& metadata, const LabelTable& labels) {
  SheetTruth truth;
  for (int q = 0; q < static_cast<int>(metadata.questions.size()); ++q) {
    const Question& question = metadata.questions[q];
    const std::string key = page_image_name(sheet_id, question.page, metadata.pages);
    std::vector<BoxResult> boxes;
    for (int c = 0; c < static_cast<int>(question.choices.size()); ++c) {
      const auto label = labels.find(key, q, c);
      if (!label) {
        throw Error(ErrorCode::LabelMissing, key + " question " + std::to_string(q) + " choice " + std::to_string(c));
      }
      boxes.push_back({*label, 1.0});
    }
    truth.awarded.push_back(grade_question(q, question, std::move(boxes)).awarded);
  }
  return truth;
}

StrategyFile parse_strategy_file(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("strategy file: ") + e.what());
  }
  StrategyFile f;
  const std::string kind = j.value("strategy", "");
  if (kind == "SF") {
    f.kind = StrategyKind::StraightForward;
  } else if (kind == "2S") {
    f.kind = StrategyKind::TwoStage;
  } else {
    throw Error(ErrorCode::SpecInvalid, "strategy must be SF or 2S, got '" + kind + "'");
  }
  f.stage1 = j.value("stage1", "");
  f.stage2 = j.value("stage2", "");
  if (f.stage1.empty()) throw Error(ErrorCode::SpecInvalid, "strategy file names no stage1 model");
  if (f.kind == StrategyKind::TwoStage && f.stage2.empty()) {
    throw Error(ErrorCode::SpecInvalid, "two-stage strategy file names no stage2 model");
  }
  return f;
}

std::string format_strategy_file(const StrategyFile& f) {
  nlohmann::ordered_json j;
  j["strategy"] = f.kind == StrategyKind::StraightForward ? "SF" : "2S";
  j["stage1"] = f.stage1;
  if (f.kind == StrategyKind::TwoStage) j["stage2"] = f.stage2;
  return j.dump(2) + "\n";
}

StrategySpec load_strategy(const fs::path& json_path) {
  const StrategyFile f = parse_strategy_file(read_text(json_path));
  const fs::path dir = json_path.parent_path();
  StrategySpec spec;
  spec.kind = f.kind;
  spec.stage1 = make_classifier(load_model(dir / f.stage1));
  if (f.kind == StrategyKind::TwoStage) spec.stage2 = make_classifier(load_model(dir / f.stage2));
  spec.validate();
  return spec;
}

std::string model_file_name(ModelKind kind, char subset) {
  return std::string(model_kind_name(kind)) + "_" + subset + ".omrm";
}

Trainer strategy_trainer(StrategyKind kind, const ClassifierConfig& first, const ClassifierConfig& second,
                         FeatureCache* cache) {
  if (kind == StrategyKind::StraightForward) return model_trainer(first, cache);
  return [first, second, cache](const SampleRefs& train, const ClassSet& classes, int fold) -> ClassifierPtr {
    if (!(classes == ClassSet::all())) {
      throw Error(ErrorCode::SpecInvalid, "a two-stage strategy is evaluated on all three classes");
    }
    ClassifierConfig c1 = first;
    ClassifierConfig c2 = second;
    c1.seed = first.seed + static_cast<std::uint64_t>(fold);
    c2.seed = second.seed + static_cast<std::uint64_t>(fold);
    auto stage1 = make_classifier(train_model(train, *ClassSet::from_subset('b'), c1, cache));
    auto stage2 = make_classifier(train_model(train, *ClassSet::from_subset('c'), c2, cache));
    return std::make_shared<StrategyClassifier>(StrategySpec::two_stage(stage1, stage2));
  };
}

std::uint64_t image_hash(const ColorImage& image) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  };
  const int dims[2] = {image.width(), image.height()};
  mix(dims, sizeof dims);
  mix(image.data().data(), image.data().size() * sizeof(float));
  return h;
}

OracleClassifier::OracleClassifier(const std::vector<LabeledSample>& samples, ClassSet classes)
    : classes_(classes) {
  for (const auto& s : samples) labels_[image_hash(s.roi.pixels)] = s.label;
}

ClassScores OracleClassifier::classify(const ColorImage& roi) const {
  const auto it = labels_.find(image_hash(roi));
  ClassScores out;
  out.predicted = it != labels_.end() ? it->second : AnswerClass::Empty;
  out.scores[class_index(out.predicted)] = 1.0;
  out.confidence = 1.0;
  return out;
}

}  // namespace omr
