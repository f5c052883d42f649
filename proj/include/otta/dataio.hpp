#pragma once

#include <string>
#include <vector>

#include "otta/buffer.hpp"

namespace otta {

/// Per-class source signature: a spatial pattern over channels and an
/// oscillation frequency.
struct ClassTemplate {
  std::vector<double> pattern;  // unit-ish norm, length C
  double freq_hz;
};

/// Synthetic class-conditional stream generator. A trial of class k is
///   X = diag(gains) * mixing * (amp * pattern_k * sin(2 pi f_k t + phi)
///                               + noise * N(0,1))  + bias
/// with a fresh phase and noise per trial. The subject transform
/// (mixing, gains, bias) is what the session/subject shifts act on.
struct GeneratorSpec {
  int n_channels = 22;
  int n_samples = 1000;
  int n_classes = 4;
  double sample_rate = 250.0;
  std::vector<ClassTemplate> templates;
  Matrix mixing;              // C x C, invertible
  std::vector<double> gains;  // per channel
  std::vector<double> bias;   // per channel DC offset
  double signal_amp = 1.0;
  double noise_level = 0.5;
  double condition_cap = 100.0;
  uint64_t seed = 0;

  void validate() const;
};

/// Deterministic default spec: near-orthogonal class patterns, distinct
/// oscillation bands, identity-plus-rotation mixing, unit gains.
GeneratorSpec default_generator_spec(int n_channels, int n_samples, int n_classes,
                                     double sample_rate, uint64_t seed);

/// Labeled trials, deterministic per (spec, n_trials, balance). Balanced
/// label counts are exact when n_trials divides evenly.
std::vector<Trial> generate_subject(const GeneratorSpec& spec, int n_trials,
                                    bool balance);

struct ShiftSpec {
  enum class Kind { none, rotation, gain, bias, combined };
  Kind kind = Kind::combined;
  double rotation_budget = 0.25;  // radians, split over random channel planes
  double gain_range = 4.0;        // log-uniform gain factor in [1/(1+r), 1+r]
  double bias_scale = 0.05;       // DC offset, in units of signal amplitude
};

/// Calibrated per-kind reference magnitudes. The single-kind budgets are
/// sized so each shift alone costs a source model a clear accuracy drop;
/// the combined profile is the benchmark subject transform.
ShiftSpec reference_shift(ShiftSpec::Kind kind);

/// New subject sharing the class templates but with transformed mixing,
/// gains, and bias: the covariance-level shift alignment is meant to remove.
/// Zero-magnitude shifts return the spec unchanged.
GeneratorSpec derive_shifted_subject(const GeneratorSpec& spec, const ShiftSpec& shift,
                                     uint64_t seed);

/// Zero-phase lowpass: 101-tap windowed-sinc FIR, applied forward per
/// channel over a symmetrically padded signal.
Trial lowpass(const Trial& trial, double cutoff_hz, double sample_rate);

struct Dataset {
  std::vector<Trial> trials;
  int n_channels = 0;
  int n_samples = 0;
  int n_classes = 0;
  double sample_rate = 0.0;
};

// Dataset file layout (little-endian):
//   magic "OTTD", u16 version (1),
//   u32 n_channels, u32 n_samples, u32 n_classes, u32 n_trials,
//   f32 sample_rate
//   per trial: u8 label (0xff = unlabeled), f32 data[C*T] row-major
void write_dataset(const std::string& path, const std::vector<Trial>& trials,
                   int n_classes, double sample_rate);
Dataset read_dataset(const std::string& path);

}  // namespace otta
