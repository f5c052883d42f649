#include "otta/buffer.hpp"

#include <sstream>

namespace otta {

RingBuffer::RingBuffer(int capacity, WeightScheme scheme, double ema_momentum)
    : capacity_(capacity), scheme_(scheme), ema_momentum_(ema_momentum) {
  if (capacity < 1) throw DimensionError("RingBuffer: capacity must be >= 1");
  if (scheme == WeightScheme::ema &&
      (ema_momentum <= 0.0 || ema_momentum >= 1.0))
    throw NumericError("RingBuffer: ema momentum must be in (0,1)");
}

void RingBuffer::push(Trial t) {
  if (!t.data.all_finite())
    throw NumericError("RingBuffer::push: trial has non-finite entries");
  if (stream_channels_ < 0) {
    stream_channels_ = t.data.rows();
    stream_samples_ = t.data.cols();
  } else if (t.data.rows() != stream_channels_ || t.data.cols() != stream_samples_) {
    std::ostringstream os;
    os << "RingBuffer::push: trial is " << t.data.rows() << "x" << t.data.cols()
       << ", stream is " << stream_channels_ << "x" << stream_samples_;
    throw DimensionError(os.str());
  }
  if (!slots_.empty() && t.trial_id <= slots_.back().trial_id)
    throw DimensionError("RingBuffer::push: trial_id not increasing");
  if (static_cast<int>(slots_.size()) == capacity_) slots_.pop_front();
  slots_.push_back(std::move(t));
}

std::vector<double> RingBuffer::weights() const {
  if (slots_.empty()) throw DimensionError("RingBuffer::weights: buffer empty");
  const int n = size();
  std::vector<double> w(n);
  switch (scheme_) {
    case WeightScheme::uniform: {
      for (int i = 0; i < n; ++i) w[i] = 1.0 / n;
      break;
    }
    case WeightScheme::linear: {
      double sum = 0.5 * n * (n + 1);
      for (int i = 0; i < n; ++i) w[i] = (i + 1) / sum;
      break;
    }
    case WeightScheme::ema: {
      // raw weight of slot i (oldest first): m * (1-m)^(n-1-i)
      const double m = ema_momentum_;
      double raw = m;
      double sum = 0.0;
      for (int i = n - 1; i >= 0; --i) {
        w[i] = raw;
        sum += raw;
        raw *= (1.0 - m);
      }
      for (int i = 0; i < n; ++i) w[i] /= sum;
      break;
    }
  }
  return w;
}

}  // namespace otta
