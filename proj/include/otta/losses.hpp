#pragma once

#include <vector>

#include "otta/tensor.hpp"

namespace otta {

struct LossResult {
  double value;
  Tensor dlogits;  // gradient of the batch-mean loss w.r.t. the logits
};

/// Mean over the batch of the softmax prediction entropy
/// H = -sum_c p_c log p_c; lies in [0, log n_classes].
LossResult entropy_loss(const Tensor& logits);

/// Cross-entropy against label-smoothed targets y(1-delta) + delta/C.
/// delta = 0 is plain cross-entropy; delta must be in [0,1).
LossResult label_smoothed_ce(const Tensor& logits, const std::vector<int>& labels,
                             double delta);

}  // namespace otta
