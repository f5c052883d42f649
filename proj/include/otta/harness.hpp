#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "otta/dataio.hpp"
#include "otta/engine.hpp"

namespace otta {

/// Source-training recipe: fixed epoch count, linear warmup followed by
/// cosine decay, label smoothing, optional per-batch alignment.
struct TrainConfig {
  int epochs = 1000;
  int warmup_epochs = 20;
  double base_lr = 1e-3;
  int batch_size = 64;
  double label_smoothing = 0.0;
  AlignmentMethod alignment_in_training = AlignmentMethod::none;
  bool center_covariance = false;
  // architecture
  int temporal_filters = 8;
  int depth_multiplier = 2;
  int pool = 8;
  double dropout = 0.25;

  void validate() const;
  /// Canonical key for model caching: two configs with equal keys train
  /// identical models from identical data and seed.
  std::string cache_key() const;
};

/// Whitens each trial of a batch against the batch's own mean covariance
/// (uniform weights), the alignment applied during source training.
std::vector<Matrix> align_batch(const std::vector<const Matrix*>& batch,
                                AlignmentMethod method, bool center = false);

/// Trains a fresh network on labeled trials. Deterministic per seed.
/// Throws NumericError with diagnostics if the loss diverges.
Network train_source(const std::vector<Trial>& data, int n_classes,
                     const TrainConfig& cfg, uint64_t seed);

/// Plain eval-phase accuracy, optionally aligning each batch first (for
/// models trained with alignment).
double evaluate_accuracy(Network& net, const std::vector<Trial>& trials,
                         AlignmentMethod align = AlignmentMethod::none,
                         int batch_size = 64);

enum class Setting { cross_session, cross_subject, continual };

struct SubjectData {
  std::vector<Trial> session1;
  std::vector<Trial> session2;
};

struct Cohort {
  std::vector<SubjectData> subjects;
  int n_classes = 0;
};

struct RunRecord {
  uint64_t seed;
  int subject;  // target subject index
  double accuracy;
  int n_scored;
};

struct ExperimentReport {
  std::string label;
  Setting setting = Setting::cross_subject;
  TrainConfig train_config;
  bool train_config_known = true;  // false when streaming a foreign checkpoint
  AdaptationConfig adapt_config;
  std::vector<RunRecord> runs;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double wall_clock_sec = 0.0;
};

/// mean +- std over seeds of the per-seed average across subjects
/// (sample standard deviation; 0 for a single seed).
std::pair<double, double> aggregate_accuracy(const std::vector<RunRecord>& runs);

/// Pooled session-1 trials of every subject except `holdout`.
std::vector<Trial> loso_training_set(const Cohort& cohort, size_t holdout);

/// Reuses trained checkpoints across sweep points that share the same
/// training data, config, and seed.
class ModelCache {
 public:
  const std::vector<uint8_t>& get_or_train(const std::string& key,
                                           const std::vector<Trial>& data,
                                           int n_classes, const TrainConfig& cfg,
                                           uint64_t seed);
  size_t size() const { return cache_.size(); }

 private:
  std::map<std::string, std::vector<uint8_t>> cache_;
};

/// Runs one experimental setting over all target subjects and seeds:
///   cross_session: per-subject model (session 1), streamed on session 2
///   cross_subject: leave-one-subject-out pooled training, streamed on the
///                  held-out subject's session 2
///   continual:     pooled training as above, adaptation over session 1
///                  then session 2, scored on session 2 only
ExperimentReport run_setting(Setting setting, const Cohort& cohort,
                             const TrainConfig& train_cfg,
                             const AdaptationConfig& adapt_cfg,
                             const std::vector<uint64_t>& seeds,
                             ModelCache* cache = nullptr);

enum class SweepAxis { buffer, delta, grid };

struct SweepEntry {
  std::string point;
  ExperimentReport report;
};

/// buffer: sizes 1..128 over the adaptation buffer;
/// delta:  label smoothing 0.0..0.6 in steps of 0.1 (retrains per point);
/// grid:   the method rows (source, EA/RA x weighting, BN modes, combos,
///         entropy minimization with and without smoothing).
std::vector<SweepEntry> sweep(SweepAxis axis, Setting setting, const Cohort& cohort,
                              const TrainConfig& base_train,
                              const AdaptationConfig& base_adapt,
                              const std::vector<uint64_t>& seeds);

void emit_report_json(const ExperimentReport& report, const std::string& path,
                      bool include_wallclock = true);
void emit_report_csv(const std::vector<SweepEntry>& entries, const std::string& path);
void emit_report_csv(const ExperimentReport& report, const std::string& path);

/// The default shifted synthetic benchmark: a small cohort of synthetic
/// subjects sharing class templates but differing by a combined
/// rotation+gain+bias subject transform. Classes share one oscillation band
/// and are told apart by their spatial patterns, so the shift attacks the
/// discriminative structure directly. Desk-scale; the documented reference
/// scenario for the directional experiments.
struct BenchmarkOptions {
  int n_channels = 8;
  int n_samples = 64;
  int n_classes = 4;
  double sample_rate = 128.0;
  double shared_band_hz = 10.0;  // 0: keep per-class bands
  double signal_amp = 2.0;
  double noise_level = 0.7;
  int n_subjects = 2;
  int train_trials = 96;
  int stream_trials = 128;
  ShiftSpec subject_shift{ShiftSpec::Kind::combined, 0.25, 4.0, 0.05};
  uint64_t master_seed = 7;
};

Cohort make_benchmark_cohort(const BenchmarkOptions& opt = {});
TrainConfig benchmark_train_config();
AdaptationConfig benchmark_adapt_config();

}  // namespace otta
