#include "otta/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "otta/kernels.hpp"

namespace otta {

namespace {

std::vector<double> widen(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

Param make_param(std::string name, std::vector<int> shape, bool learnable = true) {
  Param p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  p.value.assign(static_cast<size_t>(p.numel()), 0.0f);
  if (learnable) p.grad.assign(p.value.size(), 0.0);
  p.learnable = learnable;
  return p;
}

void glorot_fill(Param& p, double fan_in, double fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& w : p.value) w = static_cast<float>(rng.uniform(-limit, limit));
}

}  // namespace

// ---------------------------------------------------------------------------
// TemporalConv

TemporalConv::TemporalConv(int filters, int kernel_length, Rng& init_rng)
    : filters_(filters),
      kernel_length_(kernel_length),
      weight_(make_param("temporal_conv.weight", {filters, kernel_length})) {
  glorot_fill(weight_, kernel_length, kernel_length, init_rng);
}

Tensor TemporalConv::forward(const Tensor& x, const ForwardCtx&) {
  int B = x.dim(0), C = x.dim(1), T = x.dim(2);
  cached_input_ = x;
  Tensor y({B, filters_, C, T});
  auto w = widen(weight_.value);
  kernels::temporal_conv_forward(x.v.data(), w.data(), y.v.data(), B, C, T,
                                 filters_, kernel_length_);
  return y;
}

Tensor TemporalConv::backward(const Tensor& gy) {
  const Tensor& x = cached_input_;
  int B = x.dim(0), C = x.dim(1), T = x.dim(2);
  auto w = widen(weight_.value);
  std::vector<double> gw(weight_.grad.size());
  kernels::temporal_conv_backward_weight(gy.v.data(), x.v.data(), gw.data(), B, C, T,
                                         filters_, kernel_length_);
  for (size_t i = 0; i < gw.size(); ++i) weight_.grad[i] += gw[i];
  Tensor gx({B, C, T});
  kernels::temporal_conv_backward_input(gy.v.data(), w.data(), gx.v.data(), B, C, T,
                                        filters_, kernel_length_);
  return gx;
}

// ---------------------------------------------------------------------------
// SpatialConv

SpatialConv::SpatialConv(int in_filters, int depth_multiplier, int channels,
                         Rng& init_rng)
    : in_filters_(in_filters),
      depth_multiplier_(depth_multiplier),
      channels_(channels),
      weight_(make_param("spatial_conv.weight",
                         {in_filters, depth_multiplier, channels})) {
  glorot_fill(weight_, channels, channels, init_rng);
}

Tensor SpatialConv::forward(const Tensor& x, const ForwardCtx&) {
  int B = x.dim(0), T = x.dim(3);
  cached_input_ = x;
  Tensor y({B, in_filters_ * depth_multiplier_, T});
  auto w = widen(weight_.value);
  kernels::spatial_conv_forward(x.v.data(), w.data(), y.v.data(), B, in_filters_,
                                depth_multiplier_, channels_, T);
  return y;
}

Tensor SpatialConv::backward(const Tensor& gy) {
  const Tensor& x = cached_input_;
  int B = x.dim(0), T = x.dim(3);
  auto w = widen(weight_.value);
  std::vector<double> gw(weight_.grad.size());
  kernels::spatial_conv_backward_weight(gy.v.data(), x.v.data(), gw.data(), B,
                                        in_filters_, depth_multiplier_, channels_, T);
  for (size_t i = 0; i < gw.size(); ++i) weight_.grad[i] += gw[i];
  Tensor gx({B, in_filters_, channels_, T});
  kernels::spatial_conv_backward_input(gy.v.data(), w.data(), gx.v.data(), B,
                                       in_filters_, depth_multiplier_, channels_, T);
  return gx;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(int num_features, double train_momentum, Rng&)
    : num_features_(num_features),
      train_momentum_(train_momentum),
      gamma_(make_param("batch_norm.gamma", {num_features})),
      beta_(make_param("batch_norm.beta", {num_features})),
      running_mean_(make_param("batch_norm.running_mean", {num_features}, false)),
      running_var_(make_param("batch_norm.running_var", {num_features}, false)) {
  std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
  std::fill(running_var_.value.begin(), running_var_.value.end(), 1.0f);
}

void BatchNorm::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

void BatchNorm::set_mode(BnMode mode, double alpha, double ema_rate) {
  if (alpha < 0.0 || alpha > 1.0)
    throw NumericError("BatchNorm: alpha must be in [0,1]");
  if (ema_rate <= 0.0 || ema_rate > 1.0)
    throw NumericError("BatchNorm: ema rate must be in (0,1]");
  mode_ = mode;
  alpha_ = alpha;
  ema_rate_ = ema_rate;
}

void BatchNorm::reset_adaptation() {
  ema_initialized_ = false;
  ema_mean_.clear();
  ema_var_.clear();
}

std::pair<std::vector<double>, std::vector<double>> BatchNorm::effective_stats(
    const std::vector<double>& batch_mean, const std::vector<double>& batch_var) {
  for (double v : batch_var)
    if (v < 0.0) throw NumericError("BatchNorm: negative batch variance");

  std::vector<double> mu(num_features_), var(num_features_);
  switch (mode_) {
    case BnMode::source:
      for (int f = 0; f < num_features_; ++f) {
        mu[f] = running_mean_.value[f];
        var[f] = running_var_.value[f];
      }
      break;
    case BnMode::bn1:
      mu = batch_mean;
      var = batch_var;
      break;
    case BnMode::bn_alpha:
      for (int f = 0; f < num_features_; ++f) {
        mu[f] = (1.0 - alpha_) * running_mean_.value[f] + alpha_ * batch_mean[f];
        var[f] = (1.0 - alpha_) * running_var_.value[f] + alpha_ * batch_var[f];
      }
      break;
    case BnMode::bn_ema:
      if (!ema_initialized_) {
        ema_mean_.assign(running_mean_.value.begin(), running_mean_.value.end());
        ema_var_.assign(running_var_.value.begin(), running_var_.value.end());
        ema_initialized_ = true;
      }
      for (int f = 0; f < num_features_; ++f) {
        ema_mean_[f] = (1.0 - ema_rate_) * ema_mean_[f] + ema_rate_ * batch_mean[f];
        ema_var_[f] = (1.0 - ema_rate_) * ema_var_[f] + ema_rate_ * batch_var[f];
      }
      mu = ema_mean_;
      var = ema_var_;
      break;
  }
  return {std::move(mu), std::move(var)};
}

Tensor BatchNorm::forward(const Tensor& x, const ForwardCtx& ctx) {
  int B = x.dim(0), F = x.dim(1), T = x.dim(2);
  if (F != num_features_) throw DimensionError("BatchNorm: feature count mismatch");
  const int64_t n = static_cast<int64_t>(B) * T;

  const bool source_only =
      ctx.phase == Phase::eval || ctx.force_source_bn ||
      (ctx.phase == Phase::adapt && mode_ == BnMode::source);
  const bool needs_batch_stats = ctx.phase == Phase::train || !source_only;

  std::vector<double> batch_mean(num_features_, 0.0), batch_var(num_features_, 0.0);
  if (needs_batch_stats) {
    for (int b = 0; b < B; ++b)
      for (int f = 0; f < F; ++f) {
        const double* row = &x.v[(static_cast<size_t>(b) * F + f) * T];
        double s = 0.0;
        for (int t = 0; t < T; ++t) s += row[t];
        batch_mean[f] += s;
      }
    for (int f = 0; f < F; ++f) batch_mean[f] /= static_cast<double>(n);
    for (int b = 0; b < B; ++b)
      for (int f = 0; f < F; ++f) {
        const double* row = &x.v[(static_cast<size_t>(b) * F + f) * T];
        double s = 0.0;
        for (int t = 0; t < T; ++t) {
          double d = row[t] - batch_mean[f];
          s += d * d;
        }
        batch_var[f] += s;
      }
    for (int f = 0; f < F; ++f) batch_var[f] /= static_cast<double>(n);
  }

  std::vector<double> mu(num_features_), var(num_features_);
  double alpha_factor = 0.0;
  if (ctx.phase == Phase::train) {
    mu = batch_mean;
    var = batch_var;
    alpha_factor = 1.0;
    for (int f = 0; f < F; ++f) {
      running_mean_.value[f] = static_cast<float>(
          (1.0 - train_momentum_) * running_mean_.value[f] + train_momentum_ * batch_mean[f]);
      running_var_.value[f] = static_cast<float>(
          (1.0 - train_momentum_) * running_var_.value[f] + train_momentum_ * batch_var[f]);
    }
  } else if (source_only) {
    for (int f = 0; f < F; ++f) {
      mu[f] = running_mean_.value[f];
      var[f] = running_var_.value[f];
    }
  } else {
    auto stats = effective_stats(batch_mean, batch_var);
    mu = std::move(stats.first);
    var = std::move(stats.second);
    if (mode_ == BnMode::bn1) alpha_factor = 1.0;
    else if (mode_ == BnMode::bn_alpha) alpha_factor = alpha_;
    // bn_ema statistics are constants in the backward pass
  }

  Tensor y({B, F, T});
  cached_xhat_ = Tensor({B, F, T});
  cached_inv_std_.assign(num_features_, 0.0);
  cached_center_shift_.assign(num_features_, 0.0);
  cached_alpha_factor_ = alpha_factor;

  for (int f = 0; f < F; ++f) {
    double inv_std = 1.0 / std::sqrt(var[f] + kEps);
    cached_inv_std_[f] = inv_std;
    if (alpha_factor != 0.0)
      cached_center_shift_[f] = (mu[f] - batch_mean[f]) * inv_std;
  }

  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f) {
      const double* row = &x.v[(static_cast<size_t>(b) * F + f) * T];
      double* xh = &cached_xhat_.v[(static_cast<size_t>(b) * F + f) * T];
      double* yr = &y.v[(static_cast<size_t>(b) * F + f) * T];
      double g = gamma_.value[f], bta = beta_.value[f];
      double inv_std = cached_inv_std_[f], m = mu[f];
      for (int t = 0; t < T; ++t) {
        double z = (row[t] - m) * inv_std;
        xh[t] = z;
        yr[t] = g * z + bta;
      }
    }
  return y;
}

Tensor BatchNorm::backward(const Tensor& gy) {
  int B = gy.dim(0), F = gy.dim(1), T = gy.dim(2);
  const double n = static_cast<double>(B) * T;
  const double af = cached_alpha_factor_;

  Tensor gx({B, F, T});
  for (int f = 0; f < F; ++f) {
    double s1 = 0.0, s2 = 0.0;
    for (int b = 0; b < B; ++b) {
      const double* g = &gy.v[(static_cast<size_t>(b) * F + f) * T];
      const double* xh = &cached_xhat_.v[(static_cast<size_t>(b) * F + f) * T];
      for (int t = 0; t < T; ++t) {
        s1 += g[t];
        s2 += g[t] * xh[t];
      }
    }
    gamma_.grad[f] += s2;
    beta_.grad[f] += s1;

    const double gam = gamma_.value[f];
    const double inv_std = cached_inv_std_[f];
    const double shift = cached_center_shift_[f];
    for (int b = 0; b < B; ++b) {
      const double* g = &gy.v[(static_cast<size_t>(b) * F + f) * T];
      const double* xh = &cached_xhat_.v[(static_cast<size_t>(b) * F + f) * T];
      double* out = &gx.v[(static_cast<size_t>(b) * F + f) * T];
      if (af == 0.0) {
        for (int t = 0; t < T; ++t) out[t] = gam * inv_std * g[t];
      } else {
        for (int t = 0; t < T; ++t)
          out[t] = gam * inv_std *
                   (g[t] - (af / n) * (s1 + (xh[t] + shift) * s2));
      }
    }
  }
  return gx;
}

// ---------------------------------------------------------------------------
// Elu

Tensor Elu::forward(const Tensor& x, const ForwardCtx&) {
  Tensor y = x;
  for (double& v : y.v) v = v > 0.0 ? v : std::expm1(v);
  cached_output_ = y;
  return y;
}

Tensor Elu::backward(const Tensor& gy) {
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i) {
    double y = cached_output_.v[i];
    gx.v[i] *= y > 0.0 ? 1.0 : y + 1.0;
  }
  return gx;
}

// ---------------------------------------------------------------------------
// AvgPool

Tensor AvgPool::forward(const Tensor& x, const ForwardCtx&) {
  int B = x.dim(0), F = x.dim(1), T = x.dim(2);
  int out_t = T / factor_;
  if (out_t < 1) throw DimensionError("AvgPool: time extent shorter than pool factor");
  cached_in_t_ = T;
  Tensor y({B, F, out_t});
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f) {
      const double* row = &x.v[(static_cast<size_t>(b) * F + f) * T];
      double* yr = &y.v[(static_cast<size_t>(b) * F + f) * out_t];
      for (int u = 0; u < out_t; ++u) {
        double s = 0.0;
        for (int k = 0; k < factor_; ++k) s += row[u * factor_ + k];
        yr[u] = s / factor_;
      }
    }
  return y;
}

Tensor AvgPool::backward(const Tensor& gy) {
  int B = gy.dim(0), F = gy.dim(1), out_t = gy.dim(2);
  Tensor gx({B, F, cached_in_t_});
  for (int b = 0; b < B; ++b)
    for (int f = 0; f < F; ++f) {
      const double* g = &gy.v[(static_cast<size_t>(b) * F + f) * out_t];
      double* out = &gx.v[(static_cast<size_t>(b) * F + f) * cached_in_t_];
      for (int u = 0; u < out_t; ++u)
        for (int k = 0; k < factor_; ++k) out[u * factor_ + k] = g[u] / factor_;
    }
  return gx;
}

// ---------------------------------------------------------------------------
// Dropout

Tensor Dropout::forward(const Tensor& x, const ForwardCtx& ctx) {
  active_ = ctx.phase == Phase::train && rate_ > 0.0;
  if (!active_) return x;
  Rng rng(ctx.dropout_seed);
  const double keep = 1.0 - rate_;
  cached_mask_.resize(x.v.size());
  Tensor y = x;
  for (size_t i = 0; i < y.v.size(); ++i) {
    double m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    cached_mask_[i] = m;
    y.v[i] *= m;
  }
  return y;
}

Tensor Dropout::backward(const Tensor& gy) {
  if (!active_) return gy;
  Tensor gx = gy;
  for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] *= cached_mask_[i];
  return gx;
}

// ---------------------------------------------------------------------------
// Linear

Linear::Linear(int in_features, int out_features, Rng& init_rng)
    : in_features_(in_features),
      out_features_(out_features),
      weight_(make_param("classifier.weight", {out_features, in_features})),
      bias_(make_param("classifier.bias", {out_features})) {
  glorot_fill(weight_, in_features, out_features, init_rng);
}

void Linear::collect_params(std::vector<Param*>& out) {
  out.push_back(&weight_);
  out.push_back(&bias_);
}

Tensor Linear::forward(const Tensor& x, const ForwardCtx&) {
  int B = x.dim(0);
  int k = static_cast<int>(x.numel() / B);
  if (k != in_features_) {
    std::ostringstream os;
    os << "Linear: expected " << in_features_ << " flattened features, got " << k;
    throw DimensionError(os.str());
  }
  cached_in_shape_ = x.shape;
  cached_input_ = Tensor({B, k});
  cached_input_.v = x.v;
  Tensor y({B, out_features_});
  auto w = widen(weight_.value);
  auto bias = widen(bias_.value);
  kernels::linear_forward(cached_input_.v.data(), w.data(), bias.data(), y.v.data(),
                          B, k, out_features_);
  return y;
}

Tensor Linear::backward(const Tensor& gy) {
  int B = gy.dim(0);
  auto w = widen(weight_.value);
  std::vector<double> gw(weight_.grad.size()), gb(bias_.grad.size());
  kernels::linear_backward_weight(gy.v.data(), cached_input_.v.data(), gw.data(),
                                  gb.data(), B, in_features_, out_features_);
  for (size_t i = 0; i < gw.size(); ++i) weight_.grad[i] += gw[i];
  for (size_t i = 0; i < gb.size(); ++i) bias_.grad[i] += gb[i];
  Tensor gflat({B, in_features_});
  kernels::linear_backward_input(gy.v.data(), w.data(), gflat.v.data(), B,
                                 in_features_, out_features_);
  Tensor gx(cached_in_shape_);
  gx.v = std::move(gflat.v);
  return gx;
}

// ---------------------------------------------------------------------------
// Network

void ArchConfig::validate() const {
  if (n_channels < 1 || n_samples < 1 || n_classes < 2)
    throw ConfigError("ArchConfig: need channels >= 1, samples >= 1, classes >= 2");
  if (temporal_filters < 1 || depth_multiplier < 1)
    throw ConfigError("ArchConfig: filter counts must be >= 1");
  if (pool < 1 || n_samples / pool < 1)
    throw ConfigError("ArchConfig: pool factor larger than the time extent");
  if (effective_kernel_length() < 1)
    throw ConfigError("ArchConfig: kernel length must be >= 1");
  if (dropout < 0.0f || dropout >= 1.0f)
    throw ConfigError("ArchConfig: dropout must be in [0,1)");
  if (bn_momentum <= 0.0f || bn_momentum > 1.0f)
    throw ConfigError("ArchConfig: bn momentum must be in (0,1]");
}

Network::Network(const ArchConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
  cfg_.validate();
  cfg_.kernel_length = cfg_.effective_kernel_length();
  Rng rng(init_seed);
  int f2 = cfg_.temporal_filters * cfg_.depth_multiplier;
  layers_.push_back(std::make_unique<TemporalConv>(cfg_.temporal_filters,
                                                   cfg_.kernel_length, rng));
  layers_.push_back(std::make_unique<SpatialConv>(cfg_.temporal_filters,
                                                  cfg_.depth_multiplier,
                                                  cfg_.n_channels, rng));
  auto bn = std::make_unique<BatchNorm>(f2, cfg_.bn_momentum, rng);
  bn_ = bn.get();
  layers_.push_back(std::move(bn));
  layers_.push_back(std::make_unique<Elu>());
  layers_.push_back(std::make_unique<AvgPool>(cfg_.pool));
  layers_.push_back(std::make_unique<Dropout>(cfg_.dropout));
  layers_.push_back(std::make_unique<Linear>(cfg_.flattened_features(),
                                             cfg_.n_classes, rng));
}

Tensor Network::forward(const Tensor& x, const ForwardCtx& ctx) {
  if (x.ndim() != 3 || x.dim(1) != cfg_.n_channels || x.dim(2) != cfg_.n_samples) {
    std::ostringstream os;
    os << "Network::forward: expected (B," << cfg_.n_channels << ","
       << cfg_.n_samples << ") input";
    throw DimensionError(os.str());
  }
  if (x.dim(0) < 1) throw DimensionError("Network::forward: empty batch");
  x.require_finite("network input");

  Tensor a = x;
  for (auto& layer : layers_) {
    a = layer->forward(a, ctx);
    a.require_finite(std::string("layer ") + layer->name());
  }
  tape_valid_ = ctx.phase != Phase::eval;
  return a;
}

Tensor Network::backward(const Tensor& dlogits) {
  if (!tape_valid_)
    throw NumericError("Network::backward: no forward tape (run forward in train/adapt first)");
  Tensor g = dlogits;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

void Network::zero_grad() {
  for (Param* p : parameters())
    std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::vector<Param*> Network::parameters() {
  std::vector<Param*> out;
  for (auto& layer : layers_) layer->collect_params(out);
  return out;
}

std::vector<const Param*> Network::parameters() const {
  std::vector<Param*> mut;
  for (auto& layer : const_cast<Network*>(this)->layers_) layer->collect_params(mut);
  return {mut.begin(), mut.end()};
}

void Network::set_param_scope(ParamScope scope) {
  for (Param* p : parameters())
    p->adapt = scope == ParamScope::all ||
               p->name == "batch_norm.gamma" || p->name == "batch_norm.beta";
}

void Network::set_bn_mode(BnMode mode, double alpha, double ema_rate) {
  bn_->set_mode(mode, alpha, ema_rate);
}

void Network::reset_bn_adaptation() { bn_->reset_adaptation(); }

Tensor softmax(const Tensor& logits) {
  int B = logits.dim(0), n = logits.dim(1);
  Tensor p({B, n});
  for (int b = 0; b < B; ++b) {
    double mx = logits.at(b, 0);
    for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at(b, j));
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double e = std::exp(logits.at(b, j) - mx);
      p.at(b, j) = e;
      sum += e;
    }
    for (int j = 0; j < n; ++j) p.at(b, j) /= sum;
  }
  return p;
}

}  // namespace otta
