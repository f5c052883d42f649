#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "otta/matrix.hpp"

namespace otta {

/// One C x T multichannel window, the unit of streaming. The label is only
/// ever consulted for scoring.
struct Trial {
  Matrix data;                // channels x samples
  std::optional<int> label;   // class index in [0, n_classes)
  uint64_t trial_id = 0;      // monotone per stream, 1-based
};

enum class WeightScheme { uniform, linear, ema };

/// FIFO of the most recent `capacity` trials, oldest first, with the three
/// weighting schemes applied over the current contents.
class RingBuffer {
 public:
  RingBuffer(int capacity, WeightScheme scheme, double ema_momentum = 0.1);

  void push(Trial t);

  int size() const { return static_cast<int>(slots_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return slots_.empty(); }
  WeightScheme scheme() const { return scheme_; }
  double ema_momentum() const { return ema_momentum_; }

  /// oldest-first access, i in [0, size)
  const Trial& at(int i) const { return slots_[i]; }
  const Trial& newest() const { return slots_.back(); }

  /// Nonnegative weights summing to 1, oldest first.
  ///   uniform: 1/n each
  ///   linear:  w_i proportional to i (1 = oldest .. n = newest)
  ///   ema(m):  newest m, each older slot scaled by (1-m), renormalized
  std::vector<double> weights() const;

 private:
  int capacity_;
  WeightScheme scheme_;
  double ema_momentum_;
  int stream_channels_ = -1;
  int stream_samples_ = -1;
  std::deque<Trial> slots_;
};

}  // namespace otta
