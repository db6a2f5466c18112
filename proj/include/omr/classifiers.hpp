#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "omr/cnn.hpp"
#include "omr/features.hpp"
#include "omr/kmeans.hpp"
#include "omr/linear_svm.hpp"
#include "omr/nbc.hpp"
#include "omr/scores.hpp"
#include "omr/types.hpp"

namespace omr {

enum class ModelKind { Threshold, Baseline, Nbc, Bovw, Cnn };

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(std::string_view name);

// Otsu binarization followed by a black-pixel-fraction threshold. Only ever
// predicts Confirmed or Empty.
ClassScores classify_threshold_otsu(const ColorImage& roi, double t = 0.5);
// Otsu threshold on the 0..255 gray histogram; pixels at or below it count as black.
int otsu_threshold(const GrayImage& gray);

struct Vocabulary {
  int dim = 0;
  std::vector<double> centers;  // k rows of `dim`

  int k() const { return dim > 0 ? static_cast<int>(centers.size() / dim) : 0; }
};

// k-means over the pooled descriptors. At most `max_descriptors` descriptors
// (seeded uniform subsample, 0 = all) enter the clustering.
Vocabulary build_vocabulary(const std::vector<DescriptorBag>& bags, const KMeansConfig& config,
                            std::size_t max_descriptors = 0);

// Nearest-center histogram, L1-normalized; all zeros for an empty bag.
std::vector<double> encode_bovw(const Vocabulary& vocab, const DescriptorBag& bag);

struct ThresholdModel {
  double t = 0.5;
};

struct BaselineModel {
  LinearSvm svm;
};

struct NbcClassifier {
  NbcModel nbc;
  HandcraftedConfig features;
};

struct BovwModel {
  BagConfig bag;
  Vocabulary vocabulary;
  LinearSvm svm;
};

struct CnnModel {
  ClassSet classes;
  Network network;
  std::array<double, 3> channel_mean{};  // of the [0, 1] scaled training inputs
  CnnTrainingHistory history;
};

// Standardized CHW raster scaled to [0, 1], channel means removed.
std::vector<double> cnn_input(const ColorImage& roi, const Shape& shape, const std::array<double, 3>& channel_mean);

class TrainedModel {
 public:
  using Variant = std::variant<ThresholdModel, BaselineModel, NbcClassifier, BovwModel, CnnModel>;

  TrainedModel() = default;
  explicit TrainedModel(Variant model) : model_(std::move(model)) {}

  ModelKind kind() const { return static_cast<ModelKind>(model_.index()); }
  ClassSet classes() const;
  const Variant& get() const { return model_; }

  ClassScores classify(const ColorImage& roi) const;
  // Throws Error(ModelClassMismatch) when `requested` is not covered by the trained classes.
  ClassScores classify(const ColorImage& roi, const ClassSet& requested) const;

 private:
  Variant model_;
};

struct ClassifierConfig;

// Per-sample feature memo keyed by sample id. Fill it before sharing across threads.
class FeatureCache {
 public:
  const HandcraftedVector& handcrafted(const LabeledSample& s, const HandcraftedConfig& config);
  const DescriptorBag& bag(const LabeledSample& s, const BagConfig& config);
  const ColorImage& raster(const LabeledSample& s, const Shape& shape);

  // Computes the features `kind` needs for every sample, in parallel.
  void warm(const SampleRefs& samples, ModelKind kind, const ClassifierConfig& config);

 private:
  std::unordered_map<int, HandcraftedVector> handcrafted_;
  std::unordered_map<int, DescriptorBag> bags_;
  std::unordered_map<int, ColorImage> rasters_;
};

struct ClassifierConfig {
  ModelKind kind = ModelKind::Nbc;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  SvmConfig svm;
  HandcraftedConfig handcrafted;
  std::map<AnswerClass, double> prior_override;
  BagConfig bag;
  int vocabulary_size = 200;
  int vocabulary_iterations = 300;
  std::size_t max_vocabulary_descriptors = 0;
  CnnConfig cnn = CnnConfig::desk();
  // Called with the ids of the samples whose descriptors built the vocabulary.
  std::function<void(const std::vector<int>&)> vocabulary_observer;
};

// Trains on the samples whose label lies in `classes`; others are ignored.
// Throws Error(DegenerateTrainingSet) when a class has fewer than two samples.
TrainedModel train_model(const SampleRefs& samples, const ClassSet& classes, const ClassifierConfig& config,
                         FeatureCache* cache = nullptr);

BaselineModel train_baseline_svm(const SampleRefs& samples, const ClassSet& classes, const SvmConfig& config);
NbcClassifier train_nbc_classifier(const SampleRefs& samples, const ClassSet& classes,
                                   const ClassifierConfig& config, FeatureCache* cache = nullptr);
BovwModel train_bovw(const SampleRefs& samples, const ClassSet& classes, const ClassifierConfig& config,
                     FeatureCache* cache = nullptr);
CnnModel train_cnn(const SampleRefs& samples, const ClassSet& classes, const CnnConfig& config, std::uint64_t seed,
                   FeatureCache* cache = nullptr);

// "OMRM" magic, u32 format version, then a CBOR document {header, payload}.
inline constexpr std::uint32_t kModelFormatVersion = 1;
std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::span<const std::uint8_t> bytes);
void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace omr
