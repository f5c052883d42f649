#include "otta/optim.hpp"

#include <cmath>

namespace otta {

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {}

void AdamOptimizer::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (Param* p : params_) {
    if (!p->learnable || !p->adapt) continue;
    auto& mom = moments_[p];
    if (mom.m.empty()) {
      mom.m.assign(p->value.size(), 0.0);
      mom.v.assign(p->value.size(), 0.0);
    }
    for (size_t i = 0; i < p->value.size(); ++i) {
      double g = p->grad[i];
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0 - cfg_.beta1) * g;
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0 - cfg_.beta2) * g * g;
      double mhat = mom.m[i] / bc1;
      double vhat = mom.v[i] / bc2;
      p->value[i] = static_cast<float>(
          p->value[i] - cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps));
    }
  }
}

double warmup_cosine_lr(double base_lr, int epoch, int total_epochs, int warmup_epochs) {
  if (warmup_epochs >= total_epochs)
    throw ConfigError("warmup_cosine_lr: warmup must be shorter than the run");
  if (epoch < warmup_epochs)
    return base_lr * static_cast<double>(epoch) / warmup_epochs;
  double progress = static_cast<double>(epoch - warmup_epochs) /
                    (total_epochs - warmup_epochs);
  if (progress > 1.0) progress = 1.0;
  return base_lr * 0.5 * (1.0 + std::cos(3.14159265358979323846 * progress));
}

}  // namespace otta
