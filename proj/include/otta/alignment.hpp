#pragma once

#include <map>
#include <optional>

#include "otta/buffer.hpp"
#include "otta/spd.hpp"

namespace otta {

enum class AlignmentMethod { none, ea, ra };

/// Online reference-matrix estimation over a buffer and whitening of trials:
/// R = weighted mean (arithmetic for EA, geometric for RA) of per-trial
/// covariances; aligned trial = R^{-1/2} X.
class AlignmentState {
 public:
  /// `cov_ridge_rel` scales the ridge added to each per-trial covariance:
  /// ridge = cov_ridge_rel * trace / C. Guards near-singular trials before
  /// the inverse square root. `center` subtracts channel means before the
  /// covariance (off by default).
  explicit AlignmentState(AlignmentMethod method, double cov_ridge_rel = 1e-8,
                          bool center = false);

  AlignmentMethod method() const { return method_; }

  /// Recomputes the reference from the buffer contents under the buffer's
  /// weighting scheme. Per-trial covariances are cached by trial_id; entries
  /// for evicted trials are dropped. No-op for method none.
  void update_reference(const RingBuffer& buf);

  /// R^{-1/2} X with label and id preserved. Identity for method none.
  /// Requires update_reference first (or method none).
  Trial align(const Trial& trial) const;

  const std::optional<SpdMatrix>& reference() const { return reference_; }

  /// Karcher iteration controls for RA (defaults: tol 1e-8, 200 iterations;
  /// strongly shifted covariance sets converge linearly and need the slack).
  void set_karcher_controls(double tol, int max_iter) {
    karcher_tol_ = tol;
    karcher_max_iter_ = max_iter;
  }

  SpdMatrix regularized_covariance(const Matrix& trial) const;

 private:
  AlignmentMethod method_;
  double cov_ridge_rel_;
  bool center_ = false;
  double karcher_tol_ = 1e-8;
  int karcher_max_iter_ = 200;
  std::optional<SpdMatrix> reference_;
  std::optional<Matrix> whitener_;  // cached R^{-1/2}
  std::map<uint64_t, SpdMatrix> covariance_cache_;
};

}  // namespace otta
