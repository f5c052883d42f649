#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "otta/network.hpp"

namespace otta {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a parameter registry. Only parameters flagged
/// learnable && adapt are touched; moments live here, in double precision.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Param*> params, AdamConfig cfg = {});

  void step();
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  int64_t step_count() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  std::vector<Param*> params_;
  std::unordered_map<Param*, Moments> moments_;
  AdamConfig cfg_;
  int64_t step_ = 0;
};

/// Linear warmup to base_lr over warmup_epochs, then cosine decay to 0 at
/// total_epochs. Epochs are 0-based.
double warmup_cosine_lr(double base_lr, int epoch, int total_epochs, int warmup_epochs);

}  // namespace otta
