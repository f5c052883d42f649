#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "otta/tensor.hpp"

namespace otta {

enum class Phase { train, adapt, eval };

/// Test-time statistic selection for batch normalization:
///   source   - frozen training statistics
///   bn1      - statistics of the current (buffer) batch
///   bn_alpha - convex blend, (1-alpha) * source + alpha * batch
///   bn_ema   - exponential moving average of batch statistics, initialized
///              at the source statistics
enum class BnMode { source, bn1, bn_alpha, bn_ema };

enum class ParamScope { bn_affine, all };

/// One named parameter tensor. Values are float32 so checkpoints round-trip
/// bit-exactly; arithmetic happens in double. Running statistics are
/// registered with learnable = false and carry no gradient.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<double> grad;  // empty when !learnable
  bool learnable = true;
  bool adapt = true;

  int64_t numel() const {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
};

struct ForwardCtx {
  Phase phase = Phase::eval;
  uint64_t dropout_seed = 0;
  bool force_source_bn = false;  // buffer warmup: statistics not yet reliable
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& x, const ForwardCtx& ctx) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;
  virtual void collect_params(std::vector<Param*>&) {}
  virtual const char* name() const = 0;
};

/// Per-channel temporal filtering: (B,C,T) -> (B,F,C,T), zero-padded "same".
class TemporalConv : public Layer {
 public:
  TemporalConv(int filters, int kernel_length, Rng& init_rng);
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<Param*>& out) override { out.push_back(&weight_); }
  const char* name() const override { return "temporal_conv"; }

 private:
  int filters_, kernel_length_;
  Param weight_;  // (F, L)
  Tensor cached_input_;
};

/// Depthwise spatial filtering across all channels:
/// (B,F,C,T) -> (B,F*D,T).
class SpatialConv : public Layer {
 public:
  SpatialConv(int in_filters, int depth_multiplier, int channels, Rng& init_rng);
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<Param*>& out) override { out.push_back(&weight_); }
  const char* name() const override { return "spatial_conv"; }

 private:
  int in_filters_, depth_multiplier_, channels_;
  Param weight_;  // (F, D, C)
  Tensor cached_input_;
};

/// Batch normalization over the feature dimension of (B,F,T) maps, with the
/// four test-time statistic modes. Statistics reduce over batch and time.
/// In train/bn1/bn_alpha the batch statistics are part of the computation
/// graph; in source/bn_ema/eval they are constants.
class BatchNorm : public Layer {
 public:
  BatchNorm(int num_features, double train_momentum, Rng& init_rng);

  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;
  const char* name() const override { return "batch_norm"; }

  void set_mode(BnMode mode, double alpha, double ema_rate);
  BnMode mode() const { return mode_; }

  /// Statistic selection given batch statistics, per mode. Mutates the EMA
  /// state in bn_ema mode. Throws NumericError on negative batch variance.
  std::pair<std::vector<double>, std::vector<double>> effective_stats(
      const std::vector<double>& batch_mean, const std::vector<double>& batch_var);

  /// Drops adaptation state (EMA statistics) back to the source statistics.
  void reset_adaptation();

  int num_features() const { return num_features_; }
  static constexpr double kEps = 1e-5;

 private:
  int num_features_;
  double train_momentum_;
  BnMode mode_ = BnMode::source;
  double alpha_ = 0.5;
  double ema_rate_ = 0.1;
  Param gamma_, beta_;
  Param running_mean_, running_var_;     // source statistics, checkpointed
  std::vector<double> ema_mean_, ema_var_;  // bn_ema adaptation state
  bool ema_initialized_ = false;

  // backward cache
  Tensor cached_xhat_;
  std::vector<double> cached_inv_std_, cached_center_shift_;
  double cached_alpha_factor_ = 0.0;
};

class Elu : public Layer {
 public:
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* name() const override { return "elu"; }

 private:
  Tensor cached_output_;
};

/// Non-overlapping mean pooling along time; trailing remainder is dropped.
class AvgPool : public Layer {
 public:
  explicit AvgPool(int factor) : factor_(factor) {}
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* name() const override { return "avg_pool"; }

 private:
  int factor_;
  int cached_in_t_ = 0;
};

/// Inverted dropout, active only in the train phase; identity in adapt and
/// eval so streaming predictions are deterministic.
class Dropout : public Layer {
 public:
  explicit Dropout(double rate) : rate_(rate) {}
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  const char* name() const override { return "dropout"; }

 private:
  double rate_;
  std::vector<double> cached_mask_;
  bool active_ = false;
};

/// Flattens (B, ...) rows and applies an affine map to n_classes logits.
class Linear : public Layer {
 public:
  Linear(int in_features, int out_features, Rng& init_rng);
  Tensor forward(const Tensor& x, const ForwardCtx& ctx) override;
  Tensor backward(const Tensor& grad_out) override;
  void collect_params(std::vector<Param*>& out) override;
  const char* name() const override { return "classifier"; }

 private:
  int in_features_, out_features_;
  Param weight_, bias_;
  Tensor cached_input_;  // flattened (B, K)
  std::vector<int> cached_in_shape_;
};

struct ArchConfig {
  int n_channels = 22;
  int n_samples = 1000;
  int n_classes = 4;
  int temporal_filters = 8;
  int depth_multiplier = 2;
  int kernel_length = 0;  // 0: n_samples / 4
  int pool = 8;
  float dropout = 0.25f;
  float bn_momentum = 0.1f;

  int effective_kernel_length() const {
    return kernel_length > 0 ? kernel_length : n_samples / 4;
  }
  int flattened_features() const {
    return temporal_filters * depth_multiplier * (n_samples / pool);
  }
  void validate() const;
};

/// The classifier: temporal conv -> depthwise spatial conv -> batch norm ->
/// ELU -> average pool -> dropout -> linear. The single-block shape common
/// for compact multichannel time-series decoders.
class Network {
 public:
  Network(const ArchConfig& cfg, uint64_t init_seed);

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  /// x is (B, C, T); returns logits (B, n_classes). Validates finiteness
  /// after every layer and names the offending layer on failure.
  Tensor forward(const Tensor& x, const ForwardCtx& ctx);
  Tensor forward(const Tensor& x, Phase phase) { return forward(x, ForwardCtx{phase, 0, false}); }

  /// Reverse pass from dL/dlogits; accumulates into parameter gradients.
  /// Requires a preceding forward in a grad-enabled phase (train/adapt).
  Tensor backward(const Tensor& dlogits);

  void zero_grad();

  /// All registered tensors in stable order, running statistics included.
  std::vector<Param*> parameters();
  std::vector<const Param*> parameters() const;

  void set_param_scope(ParamScope scope);
  void set_bn_mode(BnMode mode, double alpha = 0.5, double ema_rate = 0.1);
  void reset_bn_adaptation();

  const ArchConfig& config() const { return cfg_; }
  BatchNorm& batch_norm() { return *bn_; }

 private:
  ArchConfig cfg_;
  std::vector<std::unique_ptr<Layer>> layers_;
  BatchNorm* bn_ = nullptr;
  bool tape_valid_ = false;
};

/// Row-wise stabilized softmax of (B, n) logits.
Tensor softmax(const Tensor& logits);

}  // namespace otta
