#include "omr/classifiers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <set>

#include "json.hpp"

#include "omr/error.hpp"
#include "omr/kernels.hpp"

namespace omr {

using nlohmann::json;

std::string_view model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Threshold: return "threshold";
    case ModelKind::Baseline: return "baseline";
    case ModelKind::Nbc: return "nbc";
    case ModelKind::Bovw: return "bovw";
    case ModelKind::Cnn: return "cnn";
  }
  return "unknown";
}

std::optional<ModelKind> model_kind_from_name(std::string_view name) {
  for (auto k : {ModelKind::Threshold, ModelKind::Baseline, ModelKind::Nbc, ModelKind::Bovw, ModelKind::Cnn}) {
    if (model_kind_name(k) == name) return k;
  }
  return std::nullopt;
}

int otsu_threshold(const GrayImage& gray) {
  std::array<double, 256> hist{};
  for (float v : gray.data()) hist[static_cast<int>(std::lround(std::clamp(v, 0.0f, 255.0f)))] += 1.0;
  double total = 0.0, total_sum = 0.0;
  for (int i = 0; i < 256; ++i) {
    total += hist[i];
    total_sum += i * hist[i];
  }
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_t = -1;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0, m1 = (total_sum - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  if (best_t >= 0) return best_t;
  // A single gray level: dark images are all ink, light ones are all paper.
  const int level = static_cast<int>(total_sum / std::max(total, 1.0));
  return level < 128 ? 255 : -1;
}

ClassScores classify_threshold_otsu(const ColorImage& roi, double t) {
  if (roi.empty()) throw Error(ErrorCode::DegenerateRoi, "empty ROI");
  const GrayImage gray = to_gray(roi);
  const int cut = otsu_threshold(gray);
  std::size_t black = 0;
  for (float v : gray.data()) black += std::lround(std::clamp(v, 0.0f, 255.0f)) <= cut;
  const double fraction = static_cast<double>(black) / static_cast<double>(gray.data().size());
  const double confidence = std::clamp(std::abs(fraction - t) * 2.0, 0.0, 1.0);
  ClassScores s;
  s.predicted = fraction > t ? AnswerClass::Confirmed : AnswerClass::Empty;
  const AnswerClass other = s.predicted == AnswerClass::Confirmed ? AnswerClass::Empty : AnswerClass::Confirmed;
  s.scores[class_index(s.predicted)] = 0.5 + 0.5 * confidence;
  s.scores[class_index(other)] = 0.5 - 0.5 * confidence;
  s.confidence = confidence;
  return s;
}

Vocabulary build_vocabulary(const std::vector<DescriptorBag>& bags, const KMeansConfig& config,
                            std::size_t max_descriptors) {
  std::vector<const std::vector<double>*> pool;
  for (const auto& bag : bags)
    for (const auto& d : bag.descriptors) pool.push_back(&d);
  if (pool.empty()) throw Error(ErrorCode::InsufficientDescriptors, "no descriptors");
  if (max_descriptors > 0 && pool.size() > max_descriptors) {
    std::vector<const std::vector<double>*> picked;
    std::mt19937_64 rng(config.seed ^ 0x5eedull);
    std::sample(pool.begin(), pool.end(), std::back_inserter(picked), max_descriptors, rng);
    pool = std::move(picked);
  }
  const int dim = static_cast<int>(pool.front()->size());
  std::vector<double> points;
  points.reserve(pool.size() * dim);
  for (const auto* d : pool) {
    if (static_cast<int>(d->size()) != dim) throw Error(ErrorCode::DimensionMismatch, "ragged descriptors");
    points.insert(points.end(), d->begin(), d->end());
  }
  const KMeansResult km = kmeans(points, dim, config);
  return Vocabulary{dim, km.centers};
}

std::vector<double> encode_bovw(const Vocabulary& vocab, const DescriptorBag& bag) {
  std::vector<double> hist(vocab.k(), 0.0);
  if (bag.descriptors.empty()) return hist;
  std::vector<double> points;
  points.reserve(bag.descriptors.size() * vocab.dim);
  for (const auto& d : bag.descriptors) {
    if (static_cast<int>(d.size()) != vocab.dim) throw Error(ErrorCode::DimensionMismatch, "descriptor length");
    points.insert(points.end(), d.begin(), d.end());
  }
  const auto assignment = kernels::nearest_centers(points, vocab.centers, vocab.dim);
  const double unit = 1.0 / static_cast<double>(bag.descriptors.size());
  for (int idx : assignment.index) hist[idx] += unit;
  return hist;
}

namespace {

ColorImage cnn_raster(const ColorImage& roi, const Shape& shape) {
  if (roi.width() < kMinRoiSide || roi.height() < kMinRoiSide) {
    throw Error(ErrorCode::DegenerateRoi,
                "ROI is " + std::to_string(roi.width()) + "x" + std::to_string(roi.height()));
  }
  return resize_bilinear(roi, shape.w, shape.h);
}

std::vector<double> raster_input(const ColorImage& raster, const std::array<double, 3>& mean) {
  const int plane = raster.width() * raster.height();
  std::vector<double> out(static_cast<std::size_t>(plane) * 3);
  const auto px = raster.data();
  for (int i = 0; i < plane; ++i)
    for (int c = 0; c < 3; ++c) out[static_cast<std::size_t>(c) * plane + i] = px[i * 3 + c] / 255.0 - mean[c];
  return out;
}

std::vector<double> mean_features(const ColorImage& roi) {
  const auto v = mean_intensity(roi).values;
  return {v.begin(), v.end()};
}

ClassScores svm_scores(const LinearSvm& svm, std::span<const double> features) {
  return scores_from_margins(svm.classes, svm.margins(features));
}

ClassScores cnn_scores(const CnnModel& m, const ColorImage& roi) {
  const Shape& in = m.network.config().input;
  const auto probs = m.network.predict(raster_input(cnn_raster(roi, in), m.channel_mean));
  return scores_from_probabilities(m.classes, probs);
}

struct ClassifyVisitor {
  const ColorImage& roi;

  ClassScores operator()(const ThresholdModel& m) const { return classify_threshold_otsu(roi, m.t); }
  ClassScores operator()(const BaselineModel& m) const { return svm_scores(m.svm, mean_features(roi)); }
  ClassScores operator()(const NbcClassifier& m) const {
    return classify_nbc(m.nbc, handcrafted_vector(roi, m.features));
  }
  ClassScores operator()(const BovwModel& m) const {
    return svm_scores(m.svm, encode_bovw(m.vocabulary, descriptor_bag(roi, m.bag)));
  }
  ClassScores operator()(const CnnModel& m) const { return cnn_scores(m, roi); }
};

SampleRefs in_classes(const SampleRefs& samples, const ClassSet& classes) {
  if (classes.size() < 2) throw Error(ErrorCode::DegenerateTrainingSet, "need at least two classes");
  SampleRefs out;
  std::array<int, 3> counts{};
  for (const auto* s : samples) {
    if (!classes.contains(s->label)) continue;
    out.push_back(s);
    ++counts[class_index(s->label)];
  }
  for (AnswerClass c : classes.members()) {
    if (counts[class_index(c)] < 2) {
      throw Error(ErrorCode::DegenerateTrainingSet, "class " + std::string(class_name(c)) + " has " +
                                                        std::to_string(counts[class_index(c)]) + " samples");
    }
  }
  return out;
}

std::vector<AnswerClass> labels_of(const SampleRefs& samples) {
  std::vector<AnswerClass> y;
  y.reserve(samples.size());
  for (const auto* s : samples) y.push_back(s->label);
  return y;
}

}  // namespace

std::vector<double> cnn_input(const ColorImage& roi, const Shape& shape, const std::array<double, 3>& channel_mean) {
  return raster_input(cnn_raster(roi, shape), channel_mean);
}

ClassSet TrainedModel::classes() const {
  struct {
    ClassSet operator()(const ThresholdModel&) const { return {AnswerClass::Confirmed, AnswerClass::Empty}; }
    ClassSet operator()(const BaselineModel& m) const { return m.svm.classes; }
    ClassSet operator()(const NbcClassifier& m) const { return m.nbc.classes; }
    ClassSet operator()(const BovwModel& m) const { return m.svm.classes; }
    ClassSet operator()(const CnnModel& m) const { return m.classes; }
  } visitor;
  return std::visit(visitor, model_);
}

ClassScores TrainedModel::classify(const ColorImage& roi) const { return std::visit(ClassifyVisitor{roi}, model_); }

ClassScores TrainedModel::classify(const ColorImage& roi, const ClassSet& requested) const {
  if (!classes().contains(requested)) {
    throw Error(ErrorCode::ModelClassMismatch, std::string(model_kind_name(kind())) +
                                                   " model was not trained on the requested classes");
  }
  return classify(roi);
}

const HandcraftedVector& FeatureCache::handcrafted(const LabeledSample& s, const HandcraftedConfig& config) {
  auto it = handcrafted_.find(s.id);
  if (it == handcrafted_.end()) it = handcrafted_.emplace(s.id, handcrafted_vector(s.roi.pixels, config)).first;
  return it->second;
}

const DescriptorBag& FeatureCache::bag(const LabeledSample& s, const BagConfig& config) {
  auto it = bags_.find(s.id);
  if (it == bags_.end()) it = bags_.emplace(s.id, descriptor_bag(s.roi.pixels, config)).first;
  return it->second;
}

const ColorImage& FeatureCache::raster(const LabeledSample& s, const Shape& shape) {
  auto it = rasters_.find(s.id);
  if (it == rasters_.end()) it = rasters_.emplace(s.id, cnn_raster(s.roi.pixels, shape)).first;
  return it->second;
}

void FeatureCache::warm(const SampleRefs& samples, ModelKind kind, const ClassifierConfig& config) {
  auto fill = [&](auto& table, auto compute) {
    SampleRefs missing;
    std::set<int> seen;
    for (const auto* s : samples)
      if (!table.contains(s->id) && seen.insert(s->id).second) missing.push_back(s);
    using Value = typename std::decay_t<decltype(table)>::mapped_type;
    std::vector<Value> values(missing.size());
#pragma omp parallel for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(missing.size()); ++i) values[i] = compute(*missing[i]);
    for (std::size_t i = 0; i < missing.size(); ++i) table.emplace(missing[i]->id, std::move(values[i]));
  };
  switch (kind) {
    case ModelKind::Nbc:
      fill(handcrafted_, [&](const LabeledSample& s) { return handcrafted_vector(s.roi.pixels, config.handcrafted); });
      break;
    case ModelKind::Bovw:
      fill(bags_, [&](const LabeledSample& s) { return descriptor_bag(s.roi.pixels, config.bag); });
      break;
    case ModelKind::Cnn:
      fill(rasters_, [&](const LabeledSample& s) { return cnn_raster(s.roi.pixels, config.cnn.input); });
      break;
    default:
      break;
  }
}

BaselineModel train_baseline_svm(const SampleRefs& samples, const ClassSet& classes, const SvmConfig& config) {
  const SampleRefs used = in_classes(samples, classes);
  std::vector<std::vector<double>> x;
  x.reserve(used.size());
  for (const auto* s : used) x.push_back(mean_features(s->roi.pixels));
  return BaselineModel{LinearSvm::train(x, labels_of(used), classes, config)};
}

NbcClassifier train_nbc_classifier(const SampleRefs& samples, const ClassSet& classes, const ClassifierConfig& config,
                                   FeatureCache* cache) {
  const SampleRefs used = in_classes(samples, classes);
  FeatureCache local;
  FeatureCache& fc = cache ? *cache : local;
  fc.warm(used, ModelKind::Nbc, config);
  std::vector<HandcraftedVector> x;
  x.reserve(used.size());
  for (const auto* s : used) x.push_back(fc.handcrafted(*s, config.handcrafted));
  return NbcClassifier{train_nbc(x, labels_of(used), classes, config.prior_override), config.handcrafted};
}

BovwModel train_bovw(const SampleRefs& samples, const ClassSet& classes, const ClassifierConfig& config,
                     FeatureCache* cache) {
  const SampleRefs used = in_classes(samples, classes);
  FeatureCache local;
  FeatureCache& fc = cache ? *cache : local;
  fc.warm(used, ModelKind::Bovw, config);
  std::vector<DescriptorBag> bags;
  std::vector<int> contributors;
  bags.reserve(used.size());
  for (const auto* s : used) {
    bags.push_back(fc.bag(*s, config.bag));
    if (!bags.back().descriptors.empty()) contributors.push_back(s->id);
  }
  if (config.vocabulary_observer) config.vocabulary_observer(contributors);

  KMeansConfig km;
  km.k = config.vocabulary_size;
  km.max_iterations = config.vocabulary_iterations;
  km.seed = config.seed;
  BovwModel model;
  model.bag = config.bag;
  model.vocabulary = build_vocabulary(bags, km, config.max_vocabulary_descriptors);

  std::vector<std::vector<double>> x;
  x.reserve(bags.size());
  for (const auto& bag : bags) x.push_back(encode_bovw(model.vocabulary, bag));
  SvmConfig svm = config.svm;
  svm.seed = config.seed;
  model.svm = LinearSvm::train(x, labels_of(used), classes, svm);
  return model;
}

CnnModel train_cnn(const SampleRefs& samples, const ClassSet& classes, const CnnConfig& config, std::uint64_t seed,
                   FeatureCache* cache) {
  const SampleRefs used = in_classes(samples, classes);
  const int num_classes = classes.size();
  validate(config, num_classes);
  FeatureCache local;
  FeatureCache& fc = cache ? *cache : local;
  ClassifierConfig warm_config;
  warm_config.cnn = config;
  fc.warm(used, ModelKind::Cnn, warm_config);

  CnnModel model;
  model.classes = classes;
  std::array<double, 3> sum{};
  std::size_t pixels = 0;
  for (const auto* s : used) {
    const auto px = fc.raster(*s, config.input).data();
    for (std::size_t i = 0; i < px.size(); i += 3)
      for (int c = 0; c < 3; ++c) sum[c] += px[i + c] / 255.0;
    pixels += px.size() / 3;
  }
  for (int c = 0; c < 3; ++c) model.channel_mean[c] = sum[c] / static_cast<double>(pixels);

  const auto members = classes.members();
  std::vector<std::vector<double>> inputs;
  std::vector<int> labels;
  inputs.reserve(used.size());
  for (const auto* s : used) {
    inputs.push_back(raster_input(fc.raster(*s, config.input), model.channel_mean));
    labels.push_back(static_cast<int>(std::find(members.begin(), members.end(), s->label) - members.begin()));
  }
  model.network = Network(config, num_classes, seed);
  model.history = train_network(model.network, inputs, labels, seed + 1);
  return model;
}

TrainedModel train_model(const SampleRefs& samples, const ClassSet& classes, const ClassifierConfig& config,
                         FeatureCache* cache) {
  switch (config.kind) {
    case ModelKind::Threshold:
      if (!(classes == ClassSet{AnswerClass::Confirmed, AnswerClass::Empty}) && !(classes == ClassSet::all())) {
        throw Error(ErrorCode::ModelClassMismatch, "the threshold baseline separates confirmed from empty only");
      }
      return TrainedModel(ThresholdModel{config.threshold});
    case ModelKind::Baseline: {
      SvmConfig svm = config.svm;
      svm.seed = config.seed;
      return TrainedModel(train_baseline_svm(samples, classes, svm));
    }
    case ModelKind::Nbc:
      return TrainedModel(train_nbc_classifier(samples, classes, config, cache));
    case ModelKind::Bovw:
      return TrainedModel(train_bovw(samples, classes, config, cache));
    case ModelKind::Cnn:
      return TrainedModel(train_cnn(samples, classes, config.cnn, config.seed, cache));
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown model kind");
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json class_codes(const ClassSet& classes) {
  json out = json::array();
  for (AnswerClass c : classes.members()) out.push_back(code(c));
  return out;
}

ClassSet classes_from(const json& j) {
  ClassSet out;
  for (const auto& v : j) {
    const auto c = class_from_code(v.get<int>());
    if (!c) throw Error(ErrorCode::ModelFormat, "unknown class code " + v.dump());
    out.insert(*c);
  }
  return out;
}

json to_json(const LinearSvm& svm) {
  return {{"classes", class_codes(svm.classes)}, {"dim", svm.dim},
          {"feature_mean", svm.feature_mean},    {"feature_scale", svm.feature_scale},
          {"weights", svm.weights},              {"hinge_history", svm.hinge_history}};
}

LinearSvm svm_from(const json& j) {
  LinearSvm svm;
  svm.classes = classes_from(j.at("classes"));
  svm.dim = j.at("dim").get<int>();
  svm.feature_mean = j.at("feature_mean").get<std::vector<double>>();
  svm.feature_scale = j.at("feature_scale").get<std::vector<double>>();
  svm.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  svm.hinge_history = j.at("hinge_history").get<std::vector<std::vector<double>>>();
  if (static_cast<int>(svm.weights.size()) != svm.classes.size()) throw Error(ErrorCode::ModelFormat, "svm weights");
  return svm;
}

json to_json(const HandcraftedConfig& c) {
  return {{"canonical_size", c.canonical_size},
          {"hog", {{"bins", c.hog.bins}, {"cell_size", c.hog.cell_size}, {"cells_per_side", c.hog.cells_per_side}}}};
}

HandcraftedConfig handcrafted_from(const json& j) {
  HandcraftedConfig c;
  c.canonical_size = j.at("canonical_size").get<int>();
  c.hog.bins = j.at("hog").at("bins").get<int>();
  c.hog.cell_size = j.at("hog").at("cell_size").get<int>();
  c.hog.cells_per_side = j.at("hog").at("cells_per_side").get<int>();
  return c;
}

json to_json(const BagConfig& c) {
  const auto& d = c.detector;
  return {{"canonical_size", c.canonical_size},
          {"margin", c.margin},
          {"detector",
           {{"name", d.name}, {"scales", d.scales}, {"integration_ratio", d.integration_ratio},
            {"harris_k", d.harris_k}, {"threshold", d.threshold}, {"nms_radius", d.nms_radius},
            {"max_keypoints", d.max_keypoints}, {"patch_radius", d.patch_radius}, {"border", d.border}}}};
}

BagConfig bag_from(const json& j) {
  BagConfig c;
  c.canonical_size = j.at("canonical_size").get<int>();
  c.margin = j.at("margin").get<int>();
  const json& d = j.at("detector");
  c.detector.name = d.at("name").get<std::string>();
  c.detector.scales = d.at("scales").get<std::vector<double>>();
  c.detector.integration_ratio = d.at("integration_ratio").get<double>();
  c.detector.harris_k = d.at("harris_k").get<double>();
  c.detector.threshold = d.at("threshold").get<double>();
  c.detector.nms_radius = d.at("nms_radius").get<int>();
  c.detector.max_keypoints = d.at("max_keypoints").get<int>();
  c.detector.patch_radius = d.at("patch_radius").get<double>();
  c.detector.border = d.at("border").get<int>();
  return c;
}

json to_json(const CnnConfig& c) {
  json layers = json::array();
  for (const auto& l : c.layers) {
    layers.push_back({{"kind", static_cast<int>(l.kind)}, {"outputs", l.outputs}, {"kernel", l.kernel},
                      {"stride", l.stride}, {"pad", l.pad}, {"groups", l.groups}, {"rate", l.rate},
                      {"window", l.window}, {"alpha", l.alpha}, {"beta", l.beta}, {"k", l.k}});
  }
  return {{"input", {c.input.c, c.input.h, c.input.w}},
          {"layers", layers},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size}};
}

CnnConfig cnn_config_from(const json& j) {
  CnnConfig c;
  const auto in = j.at("input").get<std::vector<int>>();
  if (in.size() != 3) throw Error(ErrorCode::ModelFormat, "input shape");
  c.input = {in[0], in[1], in[2]};
  for (const auto& l : j.at("layers")) {
    LayerSpec s;
    const int kind = l.at("kind").get<int>();
    if (kind < 0 || kind > static_cast<int>(LayerKind::Softmax)) throw Error(ErrorCode::ModelFormat, "layer kind");
    s.kind = static_cast<LayerKind>(kind);
    s.outputs = l.at("outputs").get<int>();
    s.kernel = l.at("kernel").get<int>();
    s.stride = l.at("stride").get<int>();
    s.pad = l.at("pad").get<int>();
    s.groups = l.at("groups").get<int>();
    s.rate = l.at("rate").get<double>();
    s.window = l.at("window").get<int>();
    s.alpha = l.at("alpha").get<double>();
    s.beta = l.at("beta").get<double>();
    s.k = l.at("k").get<double>();
    c.layers.push_back(s);
  }
  c.learning_rate = j.at("learning_rate").get<double>();
  c.momentum = j.at("momentum").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  return c;
}

json feature_config(const TrainedModel::Variant& v) {
  if (const auto* m = std::get_if<NbcClassifier>(&v)) return to_json(m->features);
  if (const auto* m = std::get_if<BovwModel>(&v)) return to_json(m->bag);
  if (const auto* m = std::get_if<CnnModel>(&v)) {
    const Shape& s = m->network.config().input;
    return {{"input", {s.c, s.h, s.w}}, {"channel_mean", m->channel_mean}};
  }
  if (const auto* m = std::get_if<ThresholdModel>(&v)) return {{"t", m->t}};
  return {{"mean_intensity", 3}};
}

json payload(const TrainedModel::Variant& v) {
  struct {
    json operator()(const ThresholdModel&) const { return json::object(); }
    json operator()(const BaselineModel& m) const { return {{"svm", to_json(m.svm)}}; }
    json operator()(const NbcClassifier& m) const {
      return {{"prior", m.nbc.prior}, {"mean", m.nbc.mean}, {"variance", m.nbc.variance}};
    }
    json operator()(const BovwModel& m) const {
      return {{"vocabulary", {{"dim", m.vocabulary.dim}, {"centers", m.vocabulary.centers}}},
              {"svm", to_json(m.svm)}};
    }
    json operator()(const CnnModel& m) const {
      return {{"config", to_json(m.network.config())},
              {"parameters", m.network.parameters()},
              {"epoch_loss", m.history.epoch_loss},
              {"epoch_accuracy", m.history.epoch_accuracy}};
    }
  } visitor;
  return std::visit(visitor, v);
}

TrainedModel from_document(const json& doc) {
  const json& header = doc.at("header");
  const json& body = doc.at("payload");
  const auto kind = model_kind_from_name(header.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::ModelFormat, "unknown model kind " + header.at("kind").dump());
  const ClassSet classes = classes_from(header.at("classes"));
  const json& features = header.at("features");
  switch (*kind) {
    case ModelKind::Threshold:
      return TrainedModel(ThresholdModel{features.at("t").get<double>()});
    case ModelKind::Baseline:
      return TrainedModel(BaselineModel{svm_from(body.at("svm"))});
    case ModelKind::Nbc: {
      NbcClassifier m;
      m.features = handcrafted_from(features);
      m.nbc.classes = classes;
      m.nbc.prior = body.at("prior").get<std::array<double, 3>>();
      m.nbc.mean = body.at("mean").get<std::array<std::array<double, kHandcraftedLength>, 3>>();
      m.nbc.variance = body.at("variance").get<std::array<std::array<double, kHandcraftedLength>, 3>>();
      return TrainedModel(std::move(m));
    }
    case ModelKind::Bovw: {
      BovwModel m;
      m.bag = bag_from(features);
      m.vocabulary.dim = body.at("vocabulary").at("dim").get<int>();
      m.vocabulary.centers = body.at("vocabulary").at("centers").get<std::vector<double>>();
      m.svm = svm_from(body.at("svm"));
      return TrainedModel(std::move(m));
    }
    case ModelKind::Cnn: {
      CnnModel m;
      m.classes = classes;
      m.channel_mean = features.at("channel_mean").get<std::array<double, 3>>();
      m.network = Network(cnn_config_from(body.at("config")), classes.size(),
                          body.at("parameters").get<std::vector<double>>());
      m.history.epoch_loss = body.at("epoch_loss").get<std::vector<double>>();
      m.history.epoch_accuracy = body.at("epoch_accuracy").get<std::vector<double>>();
      return TrainedModel(std::move(m));
    }
  }
  throw Error(ErrorCode::ModelFormat, "unknown model kind");
}

constexpr std::array<std::uint8_t, 4> kMagic{'O', 'M', 'R', 'M'};

}  // namespace

std::vector<std::uint8_t> serialize_model(const TrainedModel& model) {
  const json doc = {{"header",
                     {{"kind", model_kind_name(model.kind())},
                      {"version", kModelFormatVersion},
                      {"classes", class_codes(model.classes())},
                      {"features", feature_config(model.get())}}},
                    {"payload", payload(model.get())}};
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(kModelFormatVersion >> (8 * i)));
  const auto body = json::to_cbor(doc);
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

TrainedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(ErrorCode::ModelFormat, "missing OMRM magic");
  }
  std::uint32_t version = 0;
  for (int i = 0; i < 4; ++i) version |= static_cast<std::uint32_t>(bytes[4 + i]) << (8 * i);
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::ModelFormat, "unsupported model format version " + std::to_string(version));
  }
  try {
    return from_document(json::from_cbor(bytes.subspan(8)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ModelFormat, e.what());
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace omr
