#include "otta/losses.hpp"

#include <cmath>

#include "otta/network.hpp"

namespace otta {

namespace {

// row-wise log-softmax with max subtraction
void log_softmax_row(const Tensor& logits, int b, std::vector<double>& logp) {
  int n = logits.dim(1);
  double mx = logits.at(b, 0);
  for (int j = 1; j < n; ++j) mx = std::max(mx, logits.at(b, j));
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::exp(logits.at(b, j) - mx);
  double lse = mx + std::log(sum);
  for (int j = 0; j < n; ++j) logp[j] = logits.at(b, j) - lse;
}

}  // namespace

LossResult entropy_loss(const Tensor& logits) {
  if (logits.ndim() != 2 || logits.dim(0) < 1)
    throw DimensionError("entropy_loss: logits must be (B, n_classes), B >= 1");
  int B = logits.dim(0), n = logits.dim(1);
  LossResult out{0.0, Tensor({B, n})};
  std::vector<double> logp(n);
  for (int b = 0; b < B; ++b) {
    log_softmax_row(logits, b, logp);
    double h = 0.0;
    for (int j = 0; j < n; ++j) h -= std::exp(logp[j]) * logp[j];
    out.value += h;
    // dH/dz_k = -p_k (log p_k + H)
    for (int j = 0; j < n; ++j)
      out.dlogits.at(b, j) = -std::exp(logp[j]) * (logp[j] + h) / B;
  }
  out.value /= B;
  return out;
}

LossResult label_smoothed_ce(const Tensor& logits, const std::vector<int>& labels,
                             double delta) {
  if (delta < 0.0 || delta >= 1.0)
    throw NumericError("label_smoothed_ce: delta must be in [0,1)");
  if (logits.ndim() != 2 || logits.dim(0) < 1)
    throw DimensionError("label_smoothed_ce: logits must be (B, n_classes)");
  int B = logits.dim(0), n = logits.dim(1);
  if (static_cast<int>(labels.size()) != B)
    throw DimensionError("label_smoothed_ce: label count != batch size");

  LossResult out{0.0, Tensor({B, n})};
  std::vector<double> logp(n);
  const double off = delta / n;
  for (int b = 0; b < B; ++b) {
    int y = labels[b];
    if (y < 0 || y >= n)
      throw DimensionError("label_smoothed_ce: label out of range");
    log_softmax_row(logits, b, logp);
    double loss = 0.0;
    for (int j = 0; j < n; ++j) {
      double target = off + (j == y ? 1.0 - delta : 0.0);
      loss -= target * logp[j];
      out.dlogits.at(b, j) = (std::exp(logp[j]) - target) / B;
    }
    out.value += loss;
  }
  out.value /= B;
  return out;
}

}  // namespace otta
