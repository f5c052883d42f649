#include "otta/engine.hpp"

#include <algorithm>
#include <cmath>

#include "otta/losses.hpp"

namespace otta {

void AdaptationConfig::validate() const {
  if (buffer_size < 1) throw ConfigError("AdaptationConfig: buffer_size must be >= 1");
  if (bn_alpha < 0.0 || bn_alpha > 1.0)
    throw ConfigError("AdaptationConfig: bn_alpha must be in [0,1]");
  if (bn_ema_rate <= 0.0 || bn_ema_rate > 1.0)
    throw ConfigError("AdaptationConfig: bn_ema_rate must be in (0,1]");
  if (weighting == WeightScheme::ema && (ema_momentum <= 0.0 || ema_momentum >= 1.0))
    throw ConfigError("AdaptationConfig: ema_momentum must be in (0,1)");
  if (lr <= 0.0) throw ConfigError("AdaptationConfig: lr must be positive");
  if (bn_warmup_floor < 0) throw ConfigError("AdaptationConfig: negative warmup floor");
}

namespace {
AdaptationConfig validated(AdaptationConfig cfg) {
  cfg.validate();
  return cfg;
}
}  // namespace

OttaEngine::OttaEngine(Network net, const AdaptationConfig& cfg)
    : cfg_(validated(cfg)),
      net_(std::move(net)),
      buffer_(cfg_.buffer_size, cfg_.weighting, cfg_.ema_momentum),
      alignment_(cfg_.alignment, 1e-8, cfg_.center_covariance),
      adam_([this] {
        net_.set_param_scope(cfg_.param_scope);
        net_.set_bn_mode(cfg_.bn_mode, cfg_.bn_alpha, cfg_.bn_ema_rate);
        net_.reset_bn_adaptation();
        return net_.parameters();
      }(), AdamConfig{cfg_.lr, 0.9, 0.999, 1e-8}) {}

Prediction OttaEngine::process_trial(const Matrix& data) {
  Trial incoming;
  incoming.data = data;
  incoming.trial_id = ++seen_;
  buffer_.push(std::move(incoming));

  alignment_.update_reference(buffer_);

  const int b = buffer_.size();
  const int c = net_.config().n_channels;
  const int t = net_.config().n_samples;
  Tensor batch({b, c, t});
  for (int i = 0; i < b; ++i) {
    Trial aligned = alignment_.align(buffer_.at(i));
    std::copy(aligned.data.data(), aligned.data.data() + aligned.data.size(),
              batch.v.begin() + static_cast<size_t>(i) * c * t);
  }

  // below the warmup floor the buffer statistics are not trustworthy yet
  const int floor = std::min(cfg_.bn_warmup_floor, buffer_.capacity());
  ForwardCtx ctx{Phase::adapt, 0, b < floor};
  Tensor logits = net_.forward(batch, ctx);

  Tensor probs = softmax(logits);
  const int n = net_.config().n_classes;
  Prediction pred;
  pred.trial_id = seen_;
  pred.probs.resize(n);
  int best = 0;
  double h = 0.0;
  for (int j = 0; j < n; ++j) {
    double p = probs.at(b - 1, j);
    pred.probs[j] = p;
    if (p > pred.probs[best]) best = j;
    if (p > 0.0) h -= p * std::log(p);
  }
  pred.label = best;
  pred.confidence = pred.probs[best];
  pred.entropy = h;

  if (cfg_.entropy_min && seen_ % static_cast<uint64_t>(cfg_.buffer_size) == 0) {
    // prediction above stays as emitted even if the step fails
    try {
      LossResult em = entropy_loss(logits);
      net_.zero_grad();
      net_.backward(em.dlogits);
      adam_.step();
    } catch (const Error&) {
      ++em_failures_;
    }
  }
  return pred;
}

namespace {

void score(StreamResult& result, const Prediction& pred, const Trial& trial) {
  TrialRecord rec;
  rec.trial_id = pred.trial_id;
  rec.true_label = trial.label;
  rec.predicted = pred.label;
  rec.confidence = pred.confidence;
  rec.entropy = pred.entropy;
  result.records.push_back(rec);
  if (trial.label) {
    ++result.n_scored;
    if (*trial.label == pred.label) ++result.n_correct;
  }
}

}  // namespace

StreamResult run_stream(Network net, const AdaptationConfig& cfg,
                        const std::vector<Trial>& trials) {
  OttaEngine engine(std::move(net), cfg);
  StreamResult result;
  result.config = cfg;
  for (const Trial& trial : trials)
    score(result, engine.process_trial(trial.data), trial);
  return result;
}

StreamResult run_continual(Network net, const AdaptationConfig& cfg,
                           const std::vector<Trial>& phase1,
                           const std::vector<Trial>& phase2) {
  OttaEngine engine(std::move(net), cfg);
  for (const Trial& trial : phase1) engine.process_trial(trial.data);
  StreamResult result;
  result.config = cfg;
  for (const Trial& trial : phase2)
    score(result, engine.process_trial(trial.data), trial);
  return result;
}

}  // namespace otta
