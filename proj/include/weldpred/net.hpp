#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "weldpred/dataset.hpp"
#include "weldpred/rng.hpp"

namespace weldpred {

struct Tensor {
  std::vector<int> shape;  // row-major
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  int dim(int i) const { return shape[i]; }
  std::size_t size() const { return data.size(); }
};

enum class Mode { train, infer };

/// Handle to one trainable array and its gradient buffer.
struct ParamRef {
  std::string name;
  std::vector<double>* value;
  std::vector<double>* grad;
};

/// Non-trainable layer state (batch-norm running statistics).
struct StateRef {
  std::string name;
  std::vector<double>* data;
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& in, Mode mode, Rng* rng) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;  // valid after a train-mode forward
  virtual std::vector<ParamRef> params() { return {}; }
  virtual std::vector<StateRef> state() { return {}; }
};

/// y = x Wᵀ + b over a (batch, in) input. rng == nullptr leaves weights zero
/// (used when deserializing); otherwise fan-in-scaled uniform init.
class Dense : public Layer {
 public:
  Dense(int in, int out, Rng* rng);
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> params() override;

 private:
  int in_, out_;
  std::vector<double> w_, b_, gw_, gb_;
  Tensor x_;
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<bool> mask_;
};

/// Inverted dropout: train-mode activations scaled by 1/(1-p); inference is
/// the identity. p == 0 consumes no randomness.
class Dropout : public Layer {
 public:
  explicit Dropout(double p);
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  double p_;
  std::vector<double> scale_;  // 0 or 1/(1-p) per element
};

/// 3x3 convolution, stride 1, same zero-padding, NCHW layout.
class Conv3x3 : public Layer {
 public:
  Conv3x3(int in_ch, int out_ch, Rng* rng);
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> params() override;

 private:
  int cin_, cout_;
  std::vector<double> w_, b_, gw_, gb_;  // w: (cout, cin, 3, 3)
  Tensor x_;
};

/// 2x2 max pooling, stride 2; ties resolved to the first element scanned.
class MaxPool2 : public Layer {
 public:
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> shape_;
  std::vector<std::size_t> argmax_;
};

/// Per-channel batch normalization over NCHW. Train mode normalizes by batch
/// statistics (population variance) and updates running stats with momentum
/// 0.9; inference uses the running stats.
class BatchNorm : public Layer {
 public:
  explicit BatchNorm(int channels);
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<ParamRef> params() override;
  std::vector<StateRef> state() override;

 private:
  int ch_;
  double eps_ = 1e-5;
  std::vector<double> gamma_, beta_, ggamma_, gbeta_;
  std::vector<double> run_mean_, run_var_;
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& in, Mode mode, Rng* rng) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::vector<int> shape_;
};

/// Mean over all elements; grad_out (if given) receives dL/dpred.
double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad_out);
/// Mean absolute error; subgradient at zero residual taken as 0.
double mae_loss(const Tensor& pred, const Tensor& target, Tensor* grad_out);

class Network {
 public:
  std::vector<std::unique_ptr<Layer>> layers;

  Tensor forward(Tensor x, Mode mode, Rng* rng);
  /// Returns the gradient w.r.t. the network input.
  Tensor backward(Tensor grad);
  std::vector<ParamRef> params();
  std::vector<StateRef> state();
  void zero_grads();
  void sgd_step(double lr);
};

struct MlpConfig {
  int input_width = 16;
  int hidden_width = 128;
  int hidden_count = 1;
  int output_width = 3;
  double learning_rate = 0.003;
  double dropout_p = 0.35;  // before the output layer
  int epochs = 300;
  int batch_size = 16;

  void validate() const;
};

/// conv 8 @3x3 + bn + relu → conv 16 @3x3 + bn + relu → maxpool 2x2 →
/// dropout → flatten → fc 128 + relu → fc 3 + relu.
struct CnnConfig {
  int conv1_filters = 8;
  int conv2_filters = 16;
  int fc_width = 128;
  double learning_rate = 0.003;
  double dropout_p = 0.35;  // after pooling
  int epochs = 30;
  int batch_size = 32;
  int augment_k = 6;       // permuted copies added per training record
  double scale_max = 6.0;  // mm² mapped to pixel intensity 1.0

  void validate() const;
};

Network build_mlp(const MlpConfig& cfg, Rng* rng);
Network build_cnn(const CnnConfig& cfg, Rng* rng);

/// A trained network plus everything needed to reproduce its predictions:
/// config, weights, and the target standardization applied during training.
struct TrainedNet {
  std::variant<MlpConfig, CnnConfig> config;
  Network net;
  std::array<double, 3> y_mean{};
  std::array<double, 3> y_scale{};
  std::uint64_t seed = 0;
  std::vector<double> loss_history;        // standardized training MSE per epoch
  std::vector<double> valid_loss_history;  // empty when no validation set given

  bool is_cnn() const { return std::holds_alternative<CnnConfig>(config); }

  /// flat = 16 raw sections (MLP) or 256 image pixels row-major (CNN).
  std::array<double, 3> predict(std::span<const double> flat);
};

TrainedNet train_mlp(const Dataset& train, const MlpConfig& cfg, std::uint64_t seed,
                     const Dataset* valid = nullptr);
TrainedNet train_cnn(const Dataset& train, const CnnConfig& cfg, std::uint64_t seed,
                     const Dataset* valid = nullptr);

}  // namespace weldpred
