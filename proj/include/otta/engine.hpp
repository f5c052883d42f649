#pragma once

#include <optional>
#include <vector>

#include "otta/alignment.hpp"
#include "otta/buffer.hpp"
#include "otta/network.hpp"
#include "otta/optim.hpp"

namespace otta {

/// Full adaptation recipe: alignment method and weighting, batch-norm
/// statistic mode, entropy minimization, buffer size, learning rate, and
/// which parameters the entropy step may touch.
struct AdaptationConfig {
  AlignmentMethod alignment = AlignmentMethod::none;
  WeightScheme weighting = WeightScheme::uniform;
  double ema_momentum = 0.1;
  BnMode bn_mode = BnMode::source;
  double bn_alpha = 0.5;
  double bn_ema_rate = 0.1;
  bool entropy_min = false;
  int buffer_size = 32;
  double lr = 5e-4;
  ParamScope param_scope = ParamScope::bn_affine;
  int bn_warmup_floor = 8;
  bool center_covariance = false;

  void validate() const;
};

struct Prediction {
  uint64_t trial_id;
  int label;
  double confidence;  // softmax probability of the predicted class
  double entropy;
  std::vector<double> probs;
};

struct TrialRecord {
  uint64_t trial_id;
  std::optional<int> true_label;
  int predicted;
  double confidence;
  double entropy;
};

struct StreamResult {
  std::vector<TrialRecord> records;
  int n_scored = 0;
  int n_correct = 0;
  AdaptationConfig config;

  /// correct/total; absent for an empty (or unlabeled) stream
  std::optional<double> accuracy() const {
    if (n_scored == 0) return std::nullopt;
    return static_cast<double>(n_correct) / n_scored;
  }
};

/// One stream, strictly sequential: push -> update reference -> align the
/// whole buffer -> forward as one batch -> emit the newest trial's logits ->
/// entropy-minimization step every buffer_size trials. Labels never enter
/// this class; scoring happens in run_stream against the caller's labels.
class OttaEngine {
 public:
  OttaEngine(Network net, const AdaptationConfig& cfg);

  /// Processes one raw trial and emits its prediction. The trial's position
  /// in the stream (1-based) is assigned here.
  Prediction process_trial(const Matrix& data);

  uint64_t trials_seen() const { return seen_; }
  int entropy_step_failures() const { return em_failures_; }
  const Network& network() const { return net_; }
  Network& network() { return net_; }
  const AdaptationConfig& config() const { return cfg_; }

 private:
  AdaptationConfig cfg_;
  Network net_;
  RingBuffer buffer_;
  AlignmentState alignment_;
  AdamOptimizer adam_;
  uint64_t seen_ = 0;
  int em_failures_ = 0;
};

/// Streams `trials` in order through a fresh engine; labels carried by the
/// trials are used for scoring only.
StreamResult run_stream(Network net, const AdaptationConfig& cfg,
                        const std::vector<Trial>& trials);

/// Continual variant: the engine state (buffer, alignment, BN adaptation
/// state, adapted parameters) persists from phase 1 into phase 2; only
/// phase 2 is scored.
StreamResult run_continual(Network net, const AdaptationConfig& cfg,
                           const std::vector<Trial>& phase1,
                           const std::vector<Trial>& phase2);

}  // namespace otta
