#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace omr {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind { Conv, Relu, Lrn, MaxPool, FullyConnected, Dropout, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int outputs = 0;  // conv filters or fc units; 0 on a fc layer means "one per class"
  int kernel = 0;
  int stride = 1;
  int pad = 0;
  int groups = 1;
  double rate = 0.5;  // dropout probability
  // Cross-channel normalization: x / (k + alpha/window * sum x^2)^beta.
  int window = 5;
  double alpha = 1e-4;
  double beta = 0.75;
  double k = 1.0;

  static LayerSpec conv(int filters, int kernel, int stride = 1, int pad = 0, int groups = 1);
  static LayerSpec relu();
  static LayerSpec lrn(int window = 5);
  static LayerSpec max_pool(int kernel, int stride);
  static LayerSpec fully_connected(int units = 0);
  static LayerSpec dropout(double rate = 0.5);
  static LayerSpec softmax();

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct CnnConfig {
  Shape input{3, 64, 64};
  std::vector<LayerSpec> layers;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 40;
  int batch_size = 32;

  // conv 16@5x5 -> relu -> pool 2 -> conv 32@3x3 -> relu -> pool 2 -> fc 128 -> relu
  // -> dropout 0.5 -> fc classes -> softmax, on 64x64x3.
  static CnnConfig desk();
  // Same topology at 32x32 with 8/16 filters and 64 hidden units.
  static CnnConfig compact();
  // The 227x227x3 eight-layer geometry with grouped conv2/4/5 (shape-checked only).
  static CnnConfig alexnet();
};

// Shape after every layer (front() is the input). Throws Error(ConfigInvalid).
std::vector<Shape> validate(const CnnConfig& config, int num_classes);
std::size_t parameter_count(const CnnConfig& config, int num_classes);

// Per-call scratch space for forward/backward passes.
struct CnnWorkspace {
  std::vector<std::vector<double>> activations;
  std::vector<std::vector<double>> aux;      // im2col buffers, LRN scales, dropout masks
  std::vector<std::vector<int>> argmax;      // max-pool winners
  std::vector<double> delta;
  std::vector<double> delta_next;
};

class Network {
 public:
  Network() = default;
  // He-normal weights, zero biases.
  Network(CnnConfig config, int num_classes, std::uint64_t seed);
  // Adopts existing parameters; throws Error(ConfigInvalid) on a size mismatch.
  Network(CnnConfig config, int num_classes, std::vector<double> parameters);

  const CnnConfig& config() const { return config_; }
  int num_classes() const { return num_classes_; }
  const std::vector<Shape>& shapes() const { return shapes_; }
  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  // Inference-mode forward pass (dropout is identity); returns class probabilities.
  std::vector<double> predict(std::span<const double> input) const;

  // Training-mode forward + backward for one sample. Adds d(loss)/d(params) into
  // `gradient` and returns the cross-entropy loss. `dropout_rng` may be null to
  // disable dropout.
  double accumulate_gradient(std::span<const double> input, int label, std::span<double> gradient,
                             CnnWorkspace& ws, std::mt19937_64* dropout_rng) const;

 private:
  void forward(std::span<const double> input, CnnWorkspace& ws, std::mt19937_64* dropout_rng, bool train) const;

  CnnConfig config_;
  int num_classes_ = 0;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_;  // parameter offset per layer
  std::vector<double> params_;
};

struct CnnTrainingHistory {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;
};

// Mini-batch SGD with momentum and L2 weight decay on preprocessed inputs
// (each `inputs[i]` has config.input.size() values). Deterministic for a seed,
// independent of the OpenMP thread count. Throws Error(Divergence) on a NaN loss.
CnnTrainingHistory train_network(Network& net, const std::vector<std::vector<double>>& inputs,
                                 const std::vector<int>& labels, std::uint64_t seed);

}  // namespace omr
