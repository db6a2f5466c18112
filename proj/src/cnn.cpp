#include "omr/cnn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omr/error.hpp"

namespace omr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

LayerSpec LayerSpec::conv(int filters, int kernel, int stride, int pad, int groups) {
  LayerSpec s;
  s.kind = LayerKind::Conv;
  s.outputs = filters;
  s.kernel = kernel;
  s.stride = stride;
  s.pad = pad;
  s.groups = groups;
  return s;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::lrn(int window) {
  LayerSpec s;
  s.kind = LayerKind::Lrn;
  s.window = window;
  return s;
}

LayerSpec LayerSpec::max_pool(int kernel, int stride) {
  LayerSpec s;
  s.kind = LayerKind::MaxPool;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::fully_connected(int units) {
  LayerSpec s;
  s.kind = LayerKind::FullyConnected;
  s.outputs = units;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::Dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::softmax() {
  LayerSpec s;
  s.kind = LayerKind::Softmax;
  return s;
}

CnnConfig CnnConfig::desk() {
  CnnConfig c;
  c.input = {3, 64, 64};
  c.layers = {LayerSpec::conv(16, 5), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
              LayerSpec::conv(32, 3), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
              LayerSpec::fully_connected(128), LayerSpec::relu(), LayerSpec::dropout(0.5),
              LayerSpec::fully_connected(), LayerSpec::softmax()};
  return c;
}

CnnConfig CnnConfig::compact() {
  CnnConfig c;
  c.input = {3, 32, 32};
  c.layers = {LayerSpec::conv(8, 5), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
              LayerSpec::conv(16, 3), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
              LayerSpec::fully_connected(64), LayerSpec::relu(), LayerSpec::dropout(0.5),
              LayerSpec::fully_connected(), LayerSpec::softmax()};
  return c;
}

CnnConfig CnnConfig::alexnet() {
  CnnConfig c;
  c.input = {3, 227, 227};
  c.layers = {LayerSpec::conv(96, 11, 4, 0),      LayerSpec::relu(), LayerSpec::lrn(5), LayerSpec::max_pool(3, 2),
              LayerSpec::conv(256, 5, 1, 2, 2),   LayerSpec::relu(), LayerSpec::lrn(5), LayerSpec::max_pool(3, 2),
              LayerSpec::conv(384, 3, 1, 1),      LayerSpec::relu(),
              LayerSpec::conv(384, 3, 1, 1, 2),   LayerSpec::relu(),
              LayerSpec::conv(256, 3, 1, 1, 2),   LayerSpec::relu(), LayerSpec::max_pool(3, 2),
              LayerSpec::fully_connected(4096),   LayerSpec::relu(), LayerSpec::dropout(0.5),
              LayerSpec::fully_connected(4096),   LayerSpec::relu(), LayerSpec::dropout(0.5),
              LayerSpec::fully_connected(),       LayerSpec::softmax()};
  c.learning_rate = 0.002;
  return c;
}

namespace {

[[noreturn]] void invalid(std::size_t layer, const std::string& what) {
  throw Error(ErrorCode::ConfigInvalid, "layer " + std::to_string(layer) + ": " + what);
}

std::size_t layer_parameters(const LayerSpec& l, const Shape& in, const Shape& out) {
  switch (l.kind) {
    case LayerKind::Conv:
      return static_cast<std::size_t>(out.c) * (in.c / l.groups) * l.kernel * l.kernel + out.c;
    case LayerKind::FullyConnected:
      return static_cast<std::size_t>(out.c) * in.size() + out.c;
    default:
      return 0;
  }
}

}  // namespace

std::vector<Shape> validate(const CnnConfig& config, int num_classes) {
  if (num_classes < 2) throw Error(ErrorCode::ConfigInvalid, "need at least two classes");
  if (config.input.size() == 0) throw Error(ErrorCode::ConfigInvalid, "empty input shape");
  if (config.layers.empty() || config.layers.back().kind != LayerKind::Softmax) {
    throw Error(ErrorCode::ConfigInvalid, "the last layer must be softmax");
  }
  if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "invalid training hyper-parameters");
  }
  std::vector<Shape> shapes{config.input};
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const Shape in = shapes.back();
    Shape out = in;
    switch (l.kind) {
      case LayerKind::Conv: {
        if (l.kernel < 1 || l.stride < 1 || l.pad < 0 || l.groups < 1 || l.outputs < 1) invalid(i, "bad conv geometry");
        if (in.c % l.groups != 0 || l.outputs % l.groups != 0) invalid(i, "channels not divisible by groups");
        const int span_h = in.h + 2 * l.pad - l.kernel;
        const int span_w = in.w + 2 * l.pad - l.kernel;
        if (span_h < 0 || span_w < 0) invalid(i, "kernel larger than input");
        out = {l.outputs, span_h / l.stride + 1, span_w / l.stride + 1};
        break;
      }
      case LayerKind::MaxPool: {
        if (l.kernel < 1 || l.stride < 1) invalid(i, "bad pool geometry");
        if (in.h < l.kernel || in.w < l.kernel) invalid(i, "pool larger than input");
        out = {in.c, (in.h - l.kernel) / l.stride + 1, (in.w - l.kernel) / l.stride + 1};
        break;
      }
      case LayerKind::Lrn:
        if (l.window < 1 || l.window % 2 == 0) invalid(i, "normalization window must be odd");
        break;
      case LayerKind::Dropout:
        if (l.rate < 0.0 || l.rate >= 1.0) invalid(i, "dropout rate outside [0, 1)");
        break;
      case LayerKind::FullyConnected:
        if (l.outputs < 0) invalid(i, "negative unit count");
        out = {l.outputs == 0 ? num_classes : l.outputs, 1, 1};
        break;
      case LayerKind::Softmax:
        if (i + 1 != config.layers.size()) invalid(i, "softmax must be last");
        if (in.size() != static_cast<std::size_t>(num_classes)) invalid(i, "softmax width differs from class count");
        break;
      case LayerKind::Relu:
        break;
    }
    shapes.push_back(out);
  }
  return shapes;
}

std::size_t parameter_count(const CnnConfig& config, int num_classes) {
  const auto shapes = validate(config, num_classes);
  std::size_t total = 0;
  for (std::size_t i = 0; i < config.layers.size(); ++i) total += layer_parameters(config.layers[i], shapes[i], shapes[i + 1]);
  return total;
}

Network::Network(CnnConfig config, int num_classes, std::vector<double> parameters)
    : config_(std::move(config)), num_classes_(num_classes) {
  shapes_ = validate(config_, num_classes_);
  std::size_t total = 0;
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    offsets_.push_back(total);
    total += layer_parameters(config_.layers[i], shapes_[i], shapes_[i + 1]);
  }
  if (parameters.size() != total) {
    throw Error(ErrorCode::ConfigInvalid, "expected " + std::to_string(total) + " parameters, got " +
                                              std::to_string(parameters.size()));
  }
  params_ = std::move(parameters);
}

Network::Network(CnnConfig config, int num_classes, std::uint64_t seed)
    : Network(config, num_classes, std::vector<double>(parameter_count(config, num_classes), 0.0)) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    const LayerSpec& l = config_.layers[i];
    const Shape in = shapes_[i], out = shapes_[i + 1];
    std::size_t fan_in = 0, weights = 0;
    if (l.kind == LayerKind::Conv) {
      fan_in = static_cast<std::size_t>(in.c / l.groups) * l.kernel * l.kernel;
      weights = fan_in * out.c;
    } else if (l.kind == LayerKind::FullyConnected) {
      fan_in = in.size();
      weights = fan_in * out.c;
    } else {
      continue;
    }
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (std::size_t j = 0; j < weights; ++j) params_[offsets_[i] + j] = dist(rng);
  }
}

void Network::forward(std::span<const double> input, CnnWorkspace& ws, std::mt19937_64* dropout_rng,
                      bool train) const {
  const std::size_t layers = config_.layers.size();
  ws.activations.resize(layers + 1);
  ws.aux.resize(layers);
  ws.argmax.resize(layers);
  ws.activations[0].assign(input.begin(), input.end());
  for (std::size_t i = 0; i < layers; ++i) {
    const LayerSpec& l = config_.layers[i];
    const Shape in = shapes_[i], out = shapes_[i + 1];
    const std::vector<double>& x = ws.activations[i];
    std::vector<double>& y = ws.activations[i + 1];
    y.assign(out.size(), 0.0);
    const double* p = params_.data() + offsets_[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        const int g = l.groups, cg = in.c / g, og = out.c / g, k = l.kernel;
        const int kk = cg * k * k, n = out.h * out.w;
        std::vector<double>& cols = ws.aux[i];
        cols.assign(static_cast<std::size_t>(g) * kk * n, 0.0);
        for (int gi = 0; gi < g; ++gi) {
          double* col = cols.data() + static_cast<std::size_t>(gi) * kk * n;
          for (int c = 0; c < cg; ++c) {
            const double* plane = x.data() + static_cast<std::size_t>(gi * cg + c) * in.h * in.w;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                double* row = col + static_cast<std::size_t>((c * k + ky) * k + kx) * n;
                for (int oy = 0; oy < out.h; ++oy) {
                  const int iy = oy * l.stride - l.pad + ky;
                  if (iy < 0 || iy >= in.h) continue;
                  for (int ox = 0; ox < out.w; ++ox) {
                    const int ix = ox * l.stride - l.pad + kx;
                    if (ix >= 0 && ix < in.w) row[oy * out.w + ox] = plane[iy * in.w + ix];
                  }
                }
              }
            }
          }
          ConstMatrixMap w(p + static_cast<std::size_t>(gi) * og * kk, og, kk);
          ConstMatrixMap cm(col, kk, n);
          MatrixMap ym(y.data() + static_cast<std::size_t>(gi) * og * n, og, n);
          ym.noalias() = w * cm;
        }
        const double* bias = p + static_cast<std::size_t>(out.c) * kk;
        for (int o = 0; o < out.c; ++o) {
          double* ch = y.data() + static_cast<std::size_t>(o) * n;
          for (int t = 0; t < n; ++t) ch[t] += bias[o];
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t t = 0; t < y.size(); ++t) y[t] = x[t] > 0.0 ? x[t] : 0.0;
        break;
      case LayerKind::Lrn: {
        std::vector<double>& scale = ws.aux[i];
        scale.assign(in.size(), 0.0);
        const int plane = in.h * in.w, half = l.window / 2;
        for (int c = 0; c < in.c; ++c) {
          const int lo = std::max(0, c - half), hi = std::min(in.c - 1, c + half);
          for (int t = 0; t < plane; ++t) {
            double sum = 0.0;
            for (int cc = lo; cc <= hi; ++cc) {
              const double v = x[static_cast<std::size_t>(cc) * plane + t];
              sum += v * v;
            }
            const std::size_t idx = static_cast<std::size_t>(c) * plane + t;
            scale[idx] = l.k + l.alpha / l.window * sum;
            y[idx] = x[idx] * std::pow(scale[idx], -l.beta);
          }
        }
        break;
      }
      case LayerKind::MaxPool: {
        std::vector<int>& arg = ws.argmax[i];
        arg.assign(out.size(), 0);
        for (int c = 0; c < out.c; ++c) {
          for (int oy = 0; oy < out.h; ++oy) {
            for (int ox = 0; ox < out.w; ++ox) {
              int best = -1;
              double best_v = 0.0;
              for (int ky = 0; ky < l.kernel; ++ky) {
                for (int kx = 0; kx < l.kernel; ++kx) {
                  const int idx = (c * in.h + oy * l.stride + ky) * in.w + ox * l.stride + kx;
                  if (best < 0 || x[idx] > best_v) {
                    best = idx;
                    best_v = x[idx];
                  }
                }
              }
              const int o = (c * out.h + oy) * out.w + ox;
              y[o] = best_v;
              arg[o] = best;
            }
          }
        }
        break;
      }
      case LayerKind::FullyConnected: {
        const auto in_size = static_cast<Eigen::Index>(in.size());
        ConstMatrixMap w(p, out.c, in_size);
        ConstVectorMap b(p + static_cast<std::size_t>(out.c) * in_size, out.c);
        VectorMap(y.data(), out.c).noalias() = w * ConstVectorMap(x.data(), in_size) + b;
        break;
      }
      case LayerKind::Dropout: {
        if (!train || dropout_rng == nullptr || l.rate == 0.0) {
          y = x;
          ws.aux[i].assign(x.size(), 1.0);
          break;
        }
        std::vector<double>& mask = ws.aux[i];
        mask.resize(x.size());
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double keep = 1.0 - l.rate;
        for (std::size_t t = 0; t < x.size(); ++t) {
          mask[t] = unit(*dropout_rng) < keep ? 1.0 / keep : 0.0;
          y[t] = x[t] * mask[t];
        }
        break;
      }
      case LayerKind::Softmax: {
        const double top = *std::max_element(x.begin(), x.end());
        double sum = 0.0;
        for (std::size_t t = 0; t < x.size(); ++t) {
          y[t] = std::exp(x[t] - top);
          sum += y[t];
        }
        for (double& v : y) v /= sum;
        break;
      }
    }
  }
}

std::vector<double> Network::predict(std::span<const double> input) const {
  if (input.size() != config_.input.size()) throw Error(ErrorCode::DimensionMismatch, "network input size");
  CnnWorkspace ws;
  forward(input, ws, nullptr, false);
  return ws.activations.back();
}

double Network::accumulate_gradient(std::span<const double> input, int label, std::span<double> gradient,
                                    CnnWorkspace& ws, std::mt19937_64* dropout_rng) const {
  if (input.size() != config_.input.size()) throw Error(ErrorCode::DimensionMismatch, "network input size");
  forward(input, ws, dropout_rng, true);
  const std::vector<double>& prob = ws.activations.back();
  const double loss = -std::log(std::max(prob[label], 1e-300));

  // Softmax + cross-entropy gradient w.r.t. the softmax input.
  ws.delta = prob;
  ws.delta[label] -= 1.0;
  for (int i = static_cast<int>(config_.layers.size()) - 2; i >= 0; --i) {
    const LayerSpec& l = config_.layers[i];
    const Shape in = shapes_[i], out = shapes_[i + 1];
    const std::vector<double>& x = ws.activations[i];
    const bool need_input_grad = i > 0;
    std::vector<double>& dx = ws.delta_next;
    dx.assign(in.size(), 0.0);
    const double* p = params_.data() + offsets_[i];
    double* gp = gradient.data() + offsets_[i];
    switch (l.kind) {
      case LayerKind::Conv: {
        const int g = l.groups, cg = in.c / g, og = out.c / g, k = l.kernel;
        const int kk = cg * k * k, n = out.h * out.w;
        const std::vector<double>& cols = ws.aux[i];
        RowMatrix dcols;
        for (int gi = 0; gi < g; ++gi) {
          ConstMatrixMap d(ws.delta.data() + static_cast<std::size_t>(gi) * og * n, og, n);
          ConstMatrixMap cm(cols.data() + static_cast<std::size_t>(gi) * kk * n, kk, n);
          MatrixMap gw(gp + static_cast<std::size_t>(gi) * og * kk, og, kk);
          gw.noalias() += d * cm.transpose();
          if (!need_input_grad) continue;
          ConstMatrixMap w(p + static_cast<std::size_t>(gi) * og * kk, og, kk);
          dcols.noalias() = w.transpose() * d;
          for (int c = 0; c < cg; ++c) {
            double* plane = dx.data() + static_cast<std::size_t>(gi * cg + c) * in.h * in.w;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                const double* row = dcols.data() + static_cast<std::size_t>((c * k + ky) * k + kx) * n;
                for (int oy = 0; oy < out.h; ++oy) {
                  const int iy = oy * l.stride - l.pad + ky;
                  if (iy < 0 || iy >= in.h) continue;
                  for (int ox = 0; ox < out.w; ++ox) {
                    const int ix = ox * l.stride - l.pad + kx;
                    if (ix >= 0 && ix < in.w) plane[iy * in.w + ix] += row[oy * out.w + ox];
                  }
                }
              }
            }
          }
        }
        double* gb = gp + static_cast<std::size_t>(out.c) * kk;
        for (int o = 0; o < out.c; ++o) {
          const double* ch = ws.delta.data() + static_cast<std::size_t>(o) * n;
          gb[o] += std::accumulate(ch, ch + n, 0.0);
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t t = 0; t < dx.size(); ++t) dx[t] = x[t] > 0.0 ? ws.delta[t] : 0.0;
        break;
      case LayerKind::Lrn: {
        const std::vector<double>& scale = ws.aux[i];
        const int plane = in.h * in.w, half = l.window / 2;
        // t_i = dout_i * x_i * s_i^(-beta-1)
        std::vector<double> t(in.size());
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = ws.delta[j] * x[j] * std::pow(scale[j], -l.beta - 1.0);
        const double coef = 2.0 * l.alpha * l.beta / l.window;
        for (int c = 0; c < in.c; ++c) {
          const int lo = std::max(0, c - half), hi = std::min(in.c - 1, c + half);
          for (int q = 0; q < plane; ++q) {
            double sum = 0.0;
            for (int cc = lo; cc <= hi; ++cc) sum += t[static_cast<std::size_t>(cc) * plane + q];
            const std::size_t j = static_cast<std::size_t>(c) * plane + q;
            dx[j] = ws.delta[j] * std::pow(scale[j], -l.beta) - coef * x[j] * sum;
          }
        }
        break;
      }
      case LayerKind::MaxPool: {
        const std::vector<int>& arg = ws.argmax[i];
        for (std::size_t o = 0; o < arg.size(); ++o) dx[arg[o]] += ws.delta[o];
        break;
      }
      case LayerKind::FullyConnected: {
        const auto in_size = static_cast<Eigen::Index>(in.size());
        ConstVectorMap d(ws.delta.data(), out.c);
        MatrixMap gw(gp, out.c, in_size);
        gw.noalias() += d * ConstVectorMap(x.data(), in_size).transpose();
        VectorMap(gp + static_cast<std::size_t>(out.c) * in_size, out.c) += d;
        if (need_input_grad) {
          ConstMatrixMap w(p, out.c, in_size);
          VectorMap(dx.data(), in_size).noalias() = w.transpose() * d;
        }
        break;
      }
      case LayerKind::Dropout: {
        const std::vector<double>& mask = ws.aux[i];
        for (std::size_t t = 0; t < dx.size(); ++t) dx[t] = ws.delta[t] * mask[t];
        break;
      }
      case LayerKind::Softmax:
        throw Error(ErrorCode::ConfigInvalid, "softmax must be the last layer");
    }
    std::swap(ws.delta, ws.delta_next);
  }
  return loss;
}

CnnTrainingHistory train_network(Network& net, const std::vector<std::vector<double>>& inputs,
                                 const std::vector<int>& labels, std::uint64_t seed) {
  const CnnConfig& cfg = net.config();
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw Error(ErrorCode::DegenerateTrainingSet, "no training samples");
  }
  constexpr int kChunks = 4;
  const std::size_t n = inputs.size();
  std::vector<double>& params = net.parameters();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<std::vector<double>> chunk_grad(kChunks, std::vector<double>(params.size()));
  std::vector<CnnWorkspace> chunk_ws(kChunks);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(seed);
  CnnTrainingHistory history;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      const std::size_t batch = stop - start;
      std::array<double, kChunks> chunk_loss{};
      std::array<std::size_t, kChunks> chunk_correct{};
#pragma omp parallel for schedule(static)
      for (int ch = 0; ch < kChunks; ++ch) {
        auto& grad = chunk_grad[ch];
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t b = start + ch; b < stop; b += kChunks) {
          const std::size_t idx = order[b];
          std::mt19937_64 drop(seed ^ (0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(epoch) + 1)) ^
                               (0xBF58476D1CE4E5B9ull * (idx + 1)));
          chunk_loss[ch] += net.accumulate_gradient(inputs[idx], labels[idx], grad, chunk_ws[ch], &drop);
          const auto& prob = chunk_ws[ch].activations.back();
          if (std::max_element(prob.begin(), prob.end()) - prob.begin() == labels[idx]) ++chunk_correct[ch];
        }
      }
      for (int ch = 1; ch < kChunks; ++ch) {
        for (std::size_t j = 0; j < params.size(); ++j) chunk_grad[0][j] += chunk_grad[ch][j];
      }
      for (int ch = 0; ch < kChunks; ++ch) {
        epoch_loss += chunk_loss[ch];
        correct += chunk_correct[ch];
      }
      const double inv = 1.0 / static_cast<double>(batch);
      for (std::size_t j = 0; j < params.size(); ++j) {
        const double g = chunk_grad[0][j] * inv + cfg.weight_decay * params[j];
        velocity[j] = cfg.momentum * velocity[j] - cfg.learning_rate * g;
        params[j] += velocity[j];
      }
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) {
      throw Error(ErrorCode::Divergence, "training loss became non-finite at epoch " + std::to_string(epoch));
    }
    history.epoch_loss.push_back(epoch_loss);
    history.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
  }
  return history;
}

}  // namespace omr
