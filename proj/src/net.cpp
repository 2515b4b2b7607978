#include "weldpred/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "weldpred/error.hpp"
#include "weldpred/image.hpp"

namespace weldpred {

namespace {

std::size_t numel(std::span<const int> shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 1) throw Error(Errc::invalid_argument, "tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

void expect_shape(const Tensor& t, std::size_t dims, const char* who) {
  if (t.shape.size() != dims)
    throw Error(Errc::invalid_argument, std::string(who) + ": unexpected tensor rank");
}

double he_limit(int fan_in) { return std::sqrt(6.0 / fan_in); }

}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(numel(shape), 0.0) {}

// ---------------------------------------------------------------------- Dense

Dense::Dense(int in, int out, Rng* rng)
    : in_(in), out_(out), w_(static_cast<std::size_t>(in) * out, 0.0), b_(out, 0.0),
      gw_(w_.size(), 0.0), gb_(out, 0.0) {
  if (in < 1 || out < 1) throw Error(Errc::invalid_argument, "dense: widths must be positive");
  if (rng) {
    const double lim = he_limit(in);
    for (double& w : w_) w = rng->uniform(-lim, lim);
  }
}

Tensor Dense::forward(const Tensor& in, Mode mode, Rng*) {
  expect_shape(in, 2, "dense");
  if (in.dim(1) != in_) throw Error(Errc::invalid_argument, "dense: input width mismatch");
  const int n = in.dim(0);
  Tensor out({n, out_});
  for (int r = 0; r < n; ++r) {
    const double* x = in.data.data() + static_cast<std::size_t>(r) * in_;
    double* y = out.data.data() + static_cast<std::size_t>(r) * out_;
    for (int o = 0; o < out_; ++o) {
      const double* wrow = w_.data() + static_cast<std::size_t>(o) * in_;
      double s = b_[o];
      for (int i = 0; i < in_; ++i) s += wrow[i] * x[i];
      y[o] = s;
    }
  }
  if (mode == Mode::train) x_ = in;
  return out;
}

Tensor Dense::backward(const Tensor& grad_out) {
  const int n = x_.dim(0);
  Tensor gx({n, in_});
  for (int r = 0; r < n; ++r) {
    const double* x = x_.data.data() + static_cast<std::size_t>(r) * in_;
    const double* g = grad_out.data.data() + static_cast<std::size_t>(r) * out_;
    double* gi = gx.data.data() + static_cast<std::size_t>(r) * in_;
    for (int o = 0; o < out_; ++o) {
      const double go = g[o];
      gb_[o] += go;
      double* gwrow = gw_.data() + static_cast<std::size_t>(o) * in_;
      const double* wrow = w_.data() + static_cast<std::size_t>(o) * in_;
      for (int i = 0; i < in_; ++i) {
        gwrow[i] += go * x[i];
        gi[i] += go * wrow[i];
      }
    }
  }
  return gx;
}

std::vector<ParamRef> Dense::params() {
  return {{"w", &w_, &gw_}, {"b", &b_, &gb_}};
}

// ----------------------------------------------------------------------- ReLU

Tensor Relu::forward(const Tensor& in, Mode mode, Rng*) {
  Tensor out = in;
  if (mode == Mode::train) mask_.assign(in.size(), false);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const bool pass = out.data[i] > 0.0;
    if (!pass) out.data[i] = 0.0;
    if (mode == Mode::train) mask_[i] = pass;
  }
  return out;
}

Tensor Relu::backward(const Tensor& grad_out) {
  Tensor gx = grad_out;
  for (std::size_t i = 0; i < gx.data.size(); ++i)
    if (!mask_[i]) gx.data[i] = 0.0;
  return gx;
}

// -------------------------------------------------------------------- Dropout

Dropout::Dropout(double p) : p_(p) {
  if (!(p >= 0.0) || p >= 1.0)
    throw Error(Errc::invalid_argument, "dropout: p must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& in, Mode mode, Rng* rng) {
  if (mode == Mode::infer || p_ == 0.0) {
    scale_.clear();
    return in;
  }
  if (!rng) throw Error(Errc::invalid_argument, "dropout: train mode needs an rng");
  const double keep_scale = 1.0 / (1.0 - p_);
  scale_.resize(in.size());
  Tensor out = in;
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    scale_[i] = rng->uniform() < p_ ? 0.0 : keep_scale;
    out.data[i] *= scale_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& grad_out) {
  if (scale_.empty()) return grad_out;  // p == 0 pass-through
  Tensor gx = grad_out;
  for (std::size_t i = 0; i < gx.data.size(); ++i) gx.data[i] *= scale_[i];
  return gx;
}

// -------------------------------------------------------------------- Conv3x3

Conv3x3::Conv3x3(int in_ch, int out_ch, Rng* rng)
    : cin_(in_ch), cout_(out_ch), w_(static_cast<std::size_t>(out_ch) * in_ch * 9, 0.0),
      b_(out_ch, 0.0), gw_(w_.size(), 0.0), gb_(out_ch, 0.0) {
  if (in_ch < 1 || out_ch < 1)
    throw Error(Errc::invalid_argument, "conv: channel counts must be positive");
  if (rng) {
    const double lim = he_limit(in_ch * 9);
    for (double& w : w_) w = rng->uniform(-lim, lim);
  }
}

Tensor Conv3x3::forward(const Tensor& in, Mode mode, Rng*) {
  expect_shape(in, 4, "conv");
  if (in.dim(1) != cin_) throw Error(Errc::invalid_argument, "conv: channel mismatch");
  const int n = in.dim(0), h = in.dim(2), w = in.dim(3);
  Tensor out({n, cout_, h, w});
  const std::size_t in_ch_stride = static_cast<std::size_t>(h) * w;
  for (int b = 0; b < n; ++b) {
    const double* xb = in.data.data() + static_cast<std::size_t>(b) * cin_ * in_ch_stride;
    double* yb = out.data.data() + static_cast<std::size_t>(b) * cout_ * in_ch_stride;
    for (int f = 0; f < cout_; ++f) {
      double* y = yb + static_cast<std::size_t>(f) * in_ch_stride;
      for (std::size_t i = 0; i < in_ch_stride; ++i) y[i] = b_[f];
      for (int ch = 0; ch < cin_; ++ch) {
        const double* x = xb + static_cast<std::size_t>(ch) * in_ch_stride;
        const double* k = w_.data() + (static_cast<std::size_t>(f) * cin_ + ch) * 9;
        for (int dr = 0; dr < 3; ++dr) {
          for (int dc = 0; dc < 3; ++dc) {
            const double kv = k[dr * 3 + dc];
            if (kv == 0.0) continue;
            const int r0 = std::max(0, 1 - dr), r1 = std::min(h, h + 1 - dr);
            const int c0 = std::max(0, 1 - dc), c1 = std::min(w, w + 1 - dc);
            for (int r = r0; r < r1; ++r) {
              const double* xr = x + static_cast<std::size_t>(r + dr - 1) * w;
              double* yr = y + static_cast<std::size_t>(r) * w;
              for (int c = c0; c < c1; ++c) yr[c] += kv * xr[c + dc - 1];
            }
          }
        }
      }
    }
  }
  if (mode == Mode::train) x_ = in;
  return out;
}

Tensor Conv3x3::backward(const Tensor& grad_out) {
  const int n = x_.dim(0), h = x_.dim(2), w = x_.dim(3);
  Tensor gx({n, cin_, h, w});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int b = 0; b < n; ++b) {
    const double* xb = x_.data.data() + static_cast<std::size_t>(b) * cin_ * plane;
    double* gxb = gx.data.data() + static_cast<std::size_t>(b) * cin_ * plane;
    const double* gb = grad_out.data.data() + static_cast<std::size_t>(b) * cout_ * plane;
    for (int f = 0; f < cout_; ++f) {
      const double* g = gb + static_cast<std::size_t>(f) * plane;
      for (std::size_t i = 0; i < plane; ++i) gb_[f] += g[i];
      for (int ch = 0; ch < cin_; ++ch) {
        const double* x = xb + static_cast<std::size_t>(ch) * plane;
        double* gxc = gxb + static_cast<std::size_t>(ch) * plane;
        double* gk = gw_.data() + (static_cast<std::size_t>(f) * cin_ + ch) * 9;
        const double* k = w_.data() + (static_cast<std::size_t>(f) * cin_ + ch) * 9;
        for (int dr = 0; dr < 3; ++dr) {
          for (int dc = 0; dc < 3; ++dc) {
            const int r0 = std::max(0, 1 - dr), r1 = std::min(h, h + 1 - dr);
            const int c0 = std::max(0, 1 - dc), c1 = std::min(w, w + 1 - dc);
            double acc = 0.0;
            const double kv = k[dr * 3 + dc];
            for (int r = r0; r < r1; ++r) {
              const double* xr = x + static_cast<std::size_t>(r + dr - 1) * w;
              double* gxr = gxc + static_cast<std::size_t>(r + dr - 1) * w;
              const double* gr = g + static_cast<std::size_t>(r) * w;
              for (int c = c0; c < c1; ++c) {
                acc += gr[c] * xr[c + dc - 1];
                gxr[c + dc - 1] += gr[c] * kv;
              }
            }
            gk[dr * 3 + dc] += acc;
          }
        }
      }
    }
  }
  return gx;
}

std::vector<ParamRef> Conv3x3::params() {
  return {{"w", &w_, &gw_}, {"b", &b_, &gb_}};
}

// ------------------------------------------------------------------- MaxPool2

Tensor MaxPool2::forward(const Tensor& in, Mode mode, Rng*) {
  expect_shape(in, 4, "maxpool");
  const int n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  if (h % 2 != 0 || w % 2 != 0)
    throw Error(Errc::invalid_argument, "maxpool: spatial dims must be even");
  Tensor out({n, c, h / 2, w / 2});
  if (mode == Mode::train) {
    shape_ = in.shape;
    argmax_.assign(out.size(), 0);
  }
  std::size_t oi = 0;
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const double* plane =
          in.data.data() + (static_cast<std::size_t>(b) * c + ch) * h * w;
      for (int r = 0; r < h; r += 2)
        for (int q = 0; q < w; q += 2) {
          std::size_t best = static_cast<std::size_t>(r) * w + q;
          double best_v = plane[best];
          const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
          for (std::size_t idx : cand)
            if (plane[idx] > best_v) {
              best_v = plane[idx];
              best = idx;
            }
          out.data[oi] = best_v;
          if (mode == Mode::train)
            argmax_[oi] = (static_cast<std::size_t>(b) * c + ch) * h * w + best;
          ++oi;
        }
    }
  return out;
}

Tensor MaxPool2::backward(const Tensor& grad_out) {
  Tensor gx(shape_);
  for (std::size_t i = 0; i < grad_out.data.size(); ++i) gx.data[argmax_[i]] += grad_out.data[i];
  return gx;
}

// ------------------------------------------------------------------ BatchNorm

BatchNorm::BatchNorm(int channels)
    : ch_(channels), gamma_(channels, 1.0), beta_(channels, 0.0), ggamma_(channels, 0.0),
      gbeta_(channels, 0.0), run_mean_(channels, 0.0), run_var_(channels, 1.0) {
  if (channels < 1) throw Error(Errc::invalid_argument, "batchnorm: channels must be positive");
}

Tensor BatchNorm::forward(const Tensor& in, Mode mode, Rng*) {
  expect_shape(in, 4, "batchnorm");
  if (in.dim(1) != ch_) throw Error(Errc::invalid_argument, "batchnorm: channel mismatch");
  const int n = in.dim(0), h = in.dim(2), w = in.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t m = static_cast<std::size_t>(n) * plane;  // elements per channel
  Tensor out(in.shape);

  if (mode == Mode::train) {
    xhat_ = Tensor(in.shape);
    inv_std_.assign(ch_, 0.0);
  }
  for (int c = 0; c < ch_; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* x = in.data.data() + (static_cast<std::size_t>(b) * ch_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) s += x[i];
      }
      mean = s / m;
      double v = 0.0;
      for (int b = 0; b < n; ++b) {
        const double* x = in.data.data() + (static_cast<std::size_t>(b) * ch_ + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = x[i] - mean;
          v += d * d;
        }
      }
      var = v / m;  // population variance
      run_mean_[c] = 0.9 * run_mean_[c] + 0.1 * mean;
      run_var_[c] = 0.9 * run_var_[c] + 0.1 * var;
      inv_std_[c] = 1.0 / std::sqrt(var + eps_);
    } else {
      mean = run_mean_[c];
      var = run_var_[c];
    }
    const double istd = mode == Mode::train ? inv_std_[c] : 1.0 / std::sqrt(var + eps_);
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * ch_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double xh = (in.data[off + i] - mean) * istd;
        if (mode == Mode::train) xhat_.data[off + i] = xh;
        out.data[off + i] = gamma_[c] * xh + beta_[c];
      }
    }
  }
  return out;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
  const int n = xhat_.dim(0), h = xhat_.dim(2), w = xhat_.dim(3);
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const double m = static_cast<double>(n) * plane;
  Tensor gx(xhat_.shape);
  for (int c = 0; c < ch_; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * ch_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += grad_out.data[off + i];
        sum_gx += grad_out.data[off + i] * xhat_.data[off + i];
      }
    }
    gbeta_[c] += sum_g;
    ggamma_[c] += sum_gx;
    const double k1 = sum_g / m, k2 = sum_gx / m;
    const double scale = gamma_[c] * inv_std_[c];
    for (int b = 0; b < n; ++b) {
      const std::size_t off = (static_cast<std::size_t>(b) * ch_ + c) * plane;
      for (std::size_t i = 0; i < plane; ++i)
        gx.data[off + i] =
            scale * (grad_out.data[off + i] - k1 - xhat_.data[off + i] * k2);
    }
  }
  return gx;
}

std::vector<ParamRef> BatchNorm::params() {
  return {{"gamma", &gamma_, &ggamma_}, {"beta", &beta_, &gbeta_}};
}

std::vector<StateRef> BatchNorm::state() {
  return {{"running_mean", &run_mean_}, {"running_var", &run_var_}};
}

// -------------------------------------------------------------------- Flatten

Tensor Flatten::forward(const Tensor& in, Mode mode, Rng*) {
  if (in.shape.size() < 2) throw Error(Errc::invalid_argument, "flatten: rank must be >= 2");
  if (mode == Mode::train) shape_ = in.shape;
  Tensor out = in;
  const int n = in.dim(0);
  out.shape = {n, static_cast<int>(in.size() / n)};
  return out;
}

Tensor Flatten::backward(const Tensor& grad_out) {
  Tensor gx = grad_out;
  gx.shape = shape_;
  return gx;
}

// --------------------------------------------------------------------- losses

namespace {

void expect_same_shape(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape || a.data.empty())
    throw Error(Errc::invalid_argument, "loss: shape mismatch or empty tensors");
}

}  // namespace

double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad_out) {
  expect_same_shape(pred, target);
  const double m = static_cast<double>(pred.size());
  if (grad_out) *grad_out = Tensor(pred.shape);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    loss += d * d;
    if (grad_out) grad_out->data[i] = 2.0 * d / m;
  }
  return loss / m;
}

double mae_loss(const Tensor& pred, const Tensor& target, Tensor* grad_out) {
  expect_same_shape(pred, target);
  const double m = static_cast<double>(pred.size());
  if (grad_out) *grad_out = Tensor(pred.shape);
  double loss = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    loss += std::abs(d);
    if (grad_out) grad_out->data[i] = d > 0.0 ? 1.0 / m : (d < 0.0 ? -1.0 / m : 0.0);
  }
  return loss / m;
}

// -------------------------------------------------------------------- Network

Tensor Network::forward(Tensor x, Mode mode, Rng* rng) {
  for (auto& layer : layers) x = layer->forward(x, mode, rng);
  return x;
}

Tensor Network::backward(Tensor grad) {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) grad = (*it)->backward(grad);
  return grad;
}

std::vector<ParamRef> Network::params() {
  std::vector<ParamRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (ParamRef& p : layers[i]->params())
      out.push_back({std::to_string(i) + "." + p.name, p.value, p.grad});
  return out;
}

std::vector<StateRef> Network::state() {
  std::vector<StateRef> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    for (StateRef& s : layers[i]->state())
      out.push_back({std::to_string(i) + "." + s.name, s.data});
  return out;
}

void Network::zero_grads() {
  for (ParamRef p : params()) std::fill(p.grad->begin(), p.grad->end(), 0.0);
}

void Network::sgd_step(double lr) {
  for (ParamRef p : params())
    for (std::size_t i = 0; i < p.value->size(); ++i) (*p.value)[i] -= lr * (*p.grad)[i];
}

// -------------------------------------------------------------------- configs

void MlpConfig::validate() const {
  if (input_width < 1 || hidden_width < 1 || hidden_count < 1 || output_width < 1)
    throw Error(Errc::invalid_argument, "mlp: widths and layer count must be positive");
  if (!(dropout_p >= 0.0) || dropout_p >= 1.0)
    throw Error(Errc::invalid_argument, "mlp: dropout_p must be in [0, 1)");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
    throw Error(Errc::invalid_argument, "mlp: learning_rate must be positive");
  if (epochs < 1 || batch_size < 1)
    throw Error(Errc::invalid_argument, "mlp: epochs and batch_size must be positive");
}

void CnnConfig::validate() const {
  if (conv1_filters < 1 || conv2_filters < 1 || fc_width < 1)
    throw Error(Errc::invalid_argument, "cnn: layer sizes must be positive");
  if (!(dropout_p >= 0.0) || dropout_p >= 1.0)
    throw Error(Errc::invalid_argument, "cnn: dropout_p must be in [0, 1)");
  if (!std::isfinite(learning_rate) || learning_rate <= 0.0)
    throw Error(Errc::invalid_argument, "cnn: learning_rate must be positive");
  if (epochs < 1 || batch_size < 1)
    throw Error(Errc::invalid_argument, "cnn: epochs and batch_size must be positive");
  if (augment_k < 0) throw Error(Errc::invalid_argument, "cnn: augment_k must be non-negative");
  if (!std::isfinite(scale_max) || scale_max <= 0.0)
    throw Error(Errc::invalid_argument, "cnn: scale_max must be positive");
}

Network build_mlp(const MlpConfig& cfg, Rng* rng) {
  cfg.validate();
  Network net;
  net.layers.push_back(std::make_unique<Dense>(cfg.input_width, cfg.hidden_width, rng));
  net.layers.push_back(std::make_unique<Relu>());
  for (int i = 1; i < cfg.hidden_count; ++i) {
    net.layers.push_back(std::make_unique<Dense>(cfg.hidden_width, cfg.hidden_width, rng));
    net.layers.push_back(std::make_unique<Relu>());
  }
  net.layers.push_back(std::make_unique<Dropout>(cfg.dropout_p));
  net.layers.push_back(std::make_unique<Dense>(cfg.hidden_width, cfg.output_width, rng));
  return net;
}

Network build_cnn(const CnnConfig& cfg, Rng* rng) {
  cfg.validate();
  Network net;
  net.layers.push_back(std::make_unique<Conv3x3>(1, cfg.conv1_filters, rng));
  net.layers.push_back(std::make_unique<BatchNorm>(cfg.conv1_filters));
  net.layers.push_back(std::make_unique<Relu>());
  net.layers.push_back(std::make_unique<Conv3x3>(cfg.conv1_filters, cfg.conv2_filters, rng));
  net.layers.push_back(std::make_unique<BatchNorm>(cfg.conv2_filters));
  net.layers.push_back(std::make_unique<Relu>());
  net.layers.push_back(std::make_unique<MaxPool2>());
  net.layers.push_back(std::make_unique<Dropout>(cfg.dropout_p));
  net.layers.push_back(std::make_unique<Flatten>());
  net.layers.push_back(std::make_unique<Dense>(8 * 8 * cfg.conv2_filters, cfg.fc_width, rng));
  net.layers.push_back(std::make_unique<Relu>());
  net.layers.push_back(std::make_unique<Dense>(cfg.fc_width, 3, rng));
  net.layers.push_back(std::make_unique<Relu>());
  return net;
}

// ------------------------------------------------------------------- training

namespace {

struct FlatSet {
  std::vector<std::vector<double>> x;
  std::vector<std::array<double, 3>> y;
};

Tensor make_batch(const FlatSet& set, std::span<const std::size_t> idx, bool image_input) {
  const int b = static_cast<int>(idx.size());
  const int len = static_cast<int>(set.x[idx[0]].size());
  Tensor t(image_input ? std::vector<int>{b, 1, 16, 16} : std::vector<int>{b, len});
  for (int i = 0; i < b; ++i)
    std::copy(set.x[idx[i]].begin(), set.x[idx[i]].end(),
              t.data.begin() + static_cast<std::size_t>(i) * len);
  return t;
}

TrainedNet run_training(std::variant<MlpConfig, CnnConfig> cfg_v, Network net, Rng& rng,
                        const FlatSet& tr, const FlatSet* va, std::uint64_t seed, double lr,
                        int epochs, int batch, bool image_input) {
  const std::size_t n = tr.x.size();
  if (n == 0) throw Error(Errc::invalid_argument, "empty training set");
  if (static_cast<std::size_t>(batch) > n)
    throw Error(Errc::invalid_argument, "batch_size exceeds the training set size");

  TrainedNet out;
  out.config = std::move(cfg_v);
  out.net = std::move(net);
  out.seed = seed;

  for (int k = 0; k < 3; ++k) {
    double mu = 0.0;
    for (const auto& y : tr.y) mu += y[k];
    mu /= n;
    double var = 0.0;
    for (const auto& y : tr.y) {
      const double d = y[k] - mu;
      var += d * d;
    }
    var /= n;
    out.y_mean[k] = mu;
    out.y_scale[k] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  auto std_targets = [&](const FlatSet& set, std::span<const std::size_t> idx) {
    Tensor t({static_cast<int>(idx.size()), 3});
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (int k = 0; k < 3; ++k)
        t.data[i * 3 + k] = (set.y[idx[i]][k] - out.y_mean[k]) / out.y_scale[k];
    return t;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> valid_order;
  if (va) {
    valid_order.resize(va->x.size());
    std::iota(valid_order.begin(), valid_order.end(), std::size_t{0});
  }

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(order);
    double acc = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t b = std::min<std::size_t>(batch, n - start);
      std::span<const std::size_t> idx(order.data() + start, b);
      Tensor x = make_batch(tr, idx, image_input);
      Tensor t = std_targets(tr, idx);
      Tensor pred = out.net.forward(std::move(x), Mode::train, &rng);
      Tensor grad;
      const double loss = mse_loss(pred, t, &grad);
      if (!std::isfinite(loss))
        throw Error(Errc::training,
                    "training diverged: non-finite loss at epoch " + std::to_string(epoch));
      out.net.zero_grads();
      out.net.backward(std::move(grad));
      out.net.sgd_step(lr);
      acc += loss * b;
    }
    out.loss_history.push_back(acc / n);

    if (va && !va->x.empty()) {
      double vacc = 0.0;
      for (std::size_t start = 0; start < va->x.size(); start += batch) {
        const std::size_t b = std::min<std::size_t>(batch, va->x.size() - start);
        std::span<const std::size_t> idx(valid_order.data() + start, b);
        Tensor pred = out.net.forward(make_batch(*va, idx, image_input), Mode::infer, nullptr);
        vacc += mse_loss(pred, std_targets(*va, idx), nullptr) * b;
      }
      out.valid_loss_history.push_back(vacc / va->x.size());
    }
  }
  return out;
}

FlatSet vectors_of(const Dataset& ds) {
  FlatSet set;
  set.x.reserve(ds.size());
  set.y.reserve(ds.size());
  for (const Record& r : ds.records) {
    set.x.emplace_back(r.x.sections.begin(), r.x.sections.end());
    set.y.push_back(r.y.as_array());
  }
  return set;
}

FlatSet images_of(const Dataset& ds, int augment_k, double scale_max, std::uint64_t seed) {
  FlatSet set;
  for (ImageSample& s : build_image_dataset(ds, augment_k, scale_max, seed)) {
    set.x.push_back(std::move(s.image.pixels));
    set.y.push_back(s.label.as_array());
  }
  return set;
}

}  // namespace

TrainedNet train_mlp(const Dataset& train, const MlpConfig& cfg, std::uint64_t seed,
                     const Dataset* valid) {
  cfg.validate();
  if (cfg.input_width != kWireSlots)
    throw Error(Errc::invalid_argument, "dataset training requires input_width 16");
  if (train.empty()) throw Error(Errc::invalid_argument, "empty training set");
  Rng rng(seed);
  Network net = build_mlp(cfg, &rng);
  FlatSet tr = vectors_of(train);
  FlatSet va;
  if (valid) va = vectors_of(*valid);
  return run_training(cfg, std::move(net), rng, tr, valid ? &va : nullptr, seed,
                      cfg.learning_rate, cfg.epochs, cfg.batch_size, false);
}

TrainedNet train_cnn(const Dataset& train, const CnnConfig& cfg, std::uint64_t seed,
                     const Dataset* valid) {
  cfg.validate();
  if (train.empty()) throw Error(Errc::invalid_argument, "empty training set");
  Rng rng(seed);
  Network net = build_cnn(cfg, &rng);
  FlatSet tr = images_of(train, cfg.augment_k, cfg.scale_max, seed);
  FlatSet va;
  if (valid) va = images_of(*valid, 0, cfg.scale_max, seed);
  return run_training(cfg, std::move(net), rng, tr, valid ? &va : nullptr, seed,
                      cfg.learning_rate, cfg.epochs, cfg.batch_size, true);
}

std::array<double, 3> TrainedNet::predict(std::span<const double> flat) {
  const bool cnn = is_cnn();
  const std::size_t expected =
      cnn ? 256 : static_cast<std::size_t>(std::get<MlpConfig>(config).input_width);
  if (flat.size() != expected)
    throw Error(Errc::invalid_argument, "predict: input length mismatch");
  for (double v : flat)
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "predict: non-finite input");

  Tensor x(cnn ? std::vector<int>{1, 1, 16, 16}
               : std::vector<int>{1, static_cast<int>(expected)});
  std::copy(flat.begin(), flat.end(), x.data.begin());
  Tensor out = net.forward(std::move(x), Mode::infer, nullptr);
  if (out.size() != 3) throw Error(Errc::bad_model, "network output is not a triple");
  std::array<double, 3> y;
  for (int k = 0; k < 3; ++k) y[k] = out.data[k] * y_scale[k] + y_mean[k];
  return y;
}

}  // namespace weldpred
