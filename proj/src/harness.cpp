#include "otta/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "otta/checkpoint.hpp"
#include "otta/config.hpp"
#include "otta/kernels.hpp"
#include "otta/losses.hpp"
#include "otta/optim.hpp"
#include "otta/spd.hpp"

namespace otta {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("TrainConfig: epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs >= epochs)
    throw ConfigError("TrainConfig: warmup_epochs must be in [0, epochs)");
  if (base_lr <= 0.0) throw ConfigError("TrainConfig: base_lr must be positive");
  if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0)
    throw ConfigError("TrainConfig: label_smoothing must be in [0,1)");
  if (temporal_filters < 1 || depth_multiplier < 1 || pool < 1)
    throw ConfigError("TrainConfig: architecture extents must be >= 1");
  if (dropout < 0.0 || dropout >= 1.0)
    throw ConfigError("TrainConfig: dropout must be in [0,1)");
}

std::string TrainConfig::cache_key() const {
  std::ostringstream os;
  os.precision(17);
  os << "epochs=" << epochs << ";warmup=" << warmup_epochs << ";lr=" << base_lr
     << ";batch=" << batch_size << ";delta=" << label_smoothing
     << ";align=" << to_string(alignment_in_training) << ";center=" << center_covariance
     << ";f1=" << temporal_filters
     << ";d=" << depth_multiplier << ";pool=" << pool << ";drop=" << dropout;
  return os.str();
}

std::vector<Matrix> align_batch(const std::vector<const Matrix*>& batch,
                                AlignmentMethod method, bool center) {
  std::vector<Matrix> out;
  out.reserve(batch.size());
  if (method == AlignmentMethod::none) {
    for (const Matrix* m : batch) out.push_back(*m);
    return out;
  }
  if (batch.empty()) throw DimensionError("align_batch: empty batch");

  AlignmentState ridge_policy(method, 1e-8, center);
  std::vector<SpdMatrix> covs;
  covs.reserve(batch.size());
  for (const Matrix* m : batch) covs.push_back(ridge_policy.regularized_covariance(*m));
  std::vector<double> w(batch.size(), 1.0 / batch.size());

  SpdMatrix ea = arithmetic_mean(covs, w);
  SpdMatrix ref = method == AlignmentMethod::ea
                      ? ea
                      : geometric_mean(covs, w, 1e-8, 200, &ea);
  Matrix whitener = inv_sqrt(ref).mat();

  const int c = batch.front()->rows(), t = batch.front()->cols();
  for (const Matrix* m : batch) {
    Matrix aligned(c, t);
    kernels::matmul(whitener.data(), m->data(), aligned.data(), c, c, t);
    out.push_back(std::move(aligned));
  }
  return out;
}

namespace {

void check_homogeneous_labeled(const std::vector<Trial>& data, int n_classes,
                               const char* who) {
  if (data.empty()) throw ConfigError(std::string(who) + ": no trials");
  int c = data.front().data.rows(), t = data.front().data.cols();
  for (const Trial& trial : data) {
    if (trial.data.rows() != c || trial.data.cols() != t)
      throw DimensionError(std::string(who) + ": inhomogeneous trial shapes");
    if (!trial.label || *trial.label < 0 || *trial.label >= n_classes)
      throw ConfigError(std::string(who) + ": unlabeled trial or label out of range");
  }
}

Tensor assemble_batch(const std::vector<Matrix>& trials) {
  int b = static_cast<int>(trials.size());
  int c = trials.front().rows(), t = trials.front().cols();
  Tensor batch({b, c, t});
  for (int i = 0; i < b; ++i)
    std::copy(trials[i].data(), trials[i].data() + trials[i].size(),
              batch.v.begin() + static_cast<size_t>(i) * c * t);
  return batch;
}

}  // namespace

Network train_source(const std::vector<Trial>& data, int n_classes,
                     const TrainConfig& cfg, uint64_t seed) {
  cfg.validate();
  check_homogeneous_labeled(data, n_classes, "train_source");

  ArchConfig arch;
  arch.n_channels = data.front().data.rows();
  arch.n_samples = data.front().data.cols();
  arch.n_classes = n_classes;
  arch.temporal_filters = cfg.temporal_filters;
  arch.depth_multiplier = cfg.depth_multiplier;
  arch.pool = cfg.pool;
  arch.dropout = static_cast<float>(cfg.dropout);

  Rng root(seed);
  Network net(arch, root.next_u64());
  net.set_param_scope(ParamScope::all);
  Rng shuffle_rng = root.fork(1);
  AdamOptimizer adam(net.parameters(), AdamConfig{cfg.base_lr, 0.9, 0.999, 1e-8});

  const int n = static_cast<int>(data.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    adam.set_lr(warmup_cosine_lr(cfg.base_lr, epoch, cfg.epochs, cfg.warmup_epochs));
    for (int i = n - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng.uniform_index(static_cast<uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
    int step = 0;
    for (int start = 0; start < n; start += cfg.batch_size, ++step) {
      int end = std::min(n, start + cfg.batch_size);
      std::vector<const Matrix*> raw;
      std::vector<int> labels;
      for (int i = start; i < end; ++i) {
        raw.push_back(&data[order[i]].data);
        labels.push_back(*data[order[i]].label);
      }
      std::vector<Matrix> aligned =
          align_batch(raw, cfg.alignment_in_training, cfg.center_covariance);
      Tensor batch = assemble_batch(aligned);

      uint64_t dropout_seed =
          seed ^ (static_cast<uint64_t>(epoch) * 1000003ull + step * 7919ull +
                  0x9e3779b97f4a7c15ULL);
      Tensor logits = net.forward(batch, ForwardCtx{Phase::train, dropout_seed, false});
      LossResult loss = label_smoothed_ce(logits, labels, cfg.label_smoothing);
      if (!std::isfinite(loss.value)) {
        std::ostringstream os;
        os << "train_source: loss diverged at epoch " << epoch << ", step " << step
           << " (lr " << adam.lr() << ")";
        throw NumericError(os.str());
      }
      net.zero_grad();
      net.backward(loss.dlogits);
      adam.step();
    }
  }
  return net;
}

double evaluate_accuracy(Network& net, const std::vector<Trial>& trials,
                         AlignmentMethod align, int batch_size) {
  if (trials.empty()) throw ConfigError("evaluate_accuracy: no trials");
  const int n = static_cast<int>(trials.size());
  int correct = 0, scored = 0;
  for (int start = 0; start < n; start += batch_size) {
    int end = std::min(n, start + batch_size);
    std::vector<const Matrix*> raw;
    for (int i = start; i < end; ++i) raw.push_back(&trials[i].data);
    std::vector<Matrix> aligned = align_batch(raw, align);
    Tensor logits = net.forward(assemble_batch(aligned), Phase::eval);
    for (int i = start; i < end; ++i) {
      if (!trials[i].label) continue;
      int best = 0;
      for (int j = 1; j < logits.dim(1); ++j)
        if (logits.at(i - start, j) > logits.at(i - start, best)) best = j;
      ++scored;
      if (best == *trials[i].label) ++correct;
    }
  }
  if (scored == 0) throw ConfigError("evaluate_accuracy: no labeled trials");
  return static_cast<double>(correct) / scored;
}

std::pair<double, double> aggregate_accuracy(const std::vector<RunRecord>& runs) {
  if (runs.empty()) return {0.0, 0.0};
  std::map<uint64_t, std::pair<double, int>> per_seed;
  for (const RunRecord& r : runs) {
    per_seed[r.seed].first += r.accuracy;
    per_seed[r.seed].second += 1;
  }
  std::vector<double> seed_means;
  for (auto& [seed, acc] : per_seed) seed_means.push_back(acc.first / acc.second);
  double mean = 0.0;
  for (double m : seed_means) mean += m;
  mean /= seed_means.size();
  double var = 0.0;
  if (seed_means.size() > 1) {
    for (double m : seed_means) var += (m - mean) * (m - mean);
    var /= (seed_means.size() - 1);
  }
  return {mean, std::sqrt(var)};
}

std::vector<Trial> loso_training_set(const Cohort& cohort, size_t holdout) {
  std::vector<Trial> data;
  for (size_t i = 0; i < cohort.subjects.size(); ++i) {
    if (i == holdout) continue;
    const auto& s1 = cohort.subjects[i].session1;
    data.insert(data.end(), s1.begin(), s1.end());
  }
  return data;
}

const std::vector<uint8_t>& ModelCache::get_or_train(const std::string& key,
                                                     const std::vector<Trial>& data,
                                                     int n_classes,
                                                     const TrainConfig& cfg,
                                                     uint64_t seed) {
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    Network net = train_source(data, n_classes, cfg, seed);
    it = cache_.emplace(key, save_checkpoint(net)).first;
  }
  return it->second;
}

namespace {

std::string setting_name(Setting s) {
  switch (s) {
    case Setting::cross_session: return "cross-session";
    case Setting::cross_subject: return "cross-subject";
    case Setting::continual: return "continual";
  }
  return "?";
}

void validate_cohort(const Cohort& cohort, Setting setting) {
  if (cohort.subjects.empty()) throw ConfigError("run_setting: empty cohort");
  if (cohort.n_classes < 2) throw ConfigError("run_setting: n_classes must be >= 2");
  if (setting != Setting::cross_session && cohort.subjects.size() < 2)
    throw ConfigError("run_setting: cross-subject settings need >= 2 subjects");
  int c = -1, t = -1;
  for (const SubjectData& s : cohort.subjects) {
    check_homogeneous_labeled(s.session1, cohort.n_classes, "run_setting(session1)");
    check_homogeneous_labeled(s.session2, cohort.n_classes, "run_setting(session2)");
    int sc = s.session1.front().data.rows(), st = s.session1.front().data.cols();
    if (c < 0) { c = sc; t = st; }
    if (sc != c || st != t || s.session2.front().data.rows() != c ||
        s.session2.front().data.cols() != t)
      throw DimensionError("run_setting: subjects have inconsistent trial shapes");
  }
}

}  // namespace

ExperimentReport run_setting(Setting setting, const Cohort& cohort,
                             const TrainConfig& train_cfg,
                             const AdaptationConfig& adapt_cfg,
                             const std::vector<uint64_t>& seeds,
                             ModelCache* cache) {
  validate_cohort(cohort, setting);
  train_cfg.validate();
  adapt_cfg.validate();
  if (seeds.empty()) throw ConfigError("run_setting: no seeds");

  auto t0 = std::chrono::steady_clock::now();
  ModelCache local_cache;
  if (!cache) cache = &local_cache;

  ExperimentReport report;
  report.label = setting_name(setting);
  report.setting = setting;
  report.train_config = train_cfg;
  report.adapt_config = adapt_cfg;

  for (uint64_t seed : seeds) {
    for (size_t k = 0; k < cohort.subjects.size(); ++k) {
      const SubjectData& target = cohort.subjects[k];
      std::vector<Trial> train_data;
      std::string scope;
      if (setting == Setting::cross_session) {
        train_data = target.session1;
        scope = "subject" + std::to_string(k);
      } else {
        train_data = loso_training_set(cohort, k);
        scope = "loso" + std::to_string(k);
      }
      std::string key = scope + ";seed=" + std::to_string(seed) + ";" +
                        train_cfg.cache_key();
      const auto& ckpt =
          cache->get_or_train(key, train_data, cohort.n_classes, train_cfg, seed);
      Network net = load_checkpoint(ckpt);

      StreamResult result =
          setting == Setting::continual
              ? run_continual(std::move(net), adapt_cfg, target.session1,
                              target.session2)
              : run_stream(std::move(net), adapt_cfg, target.session2);
      if (!result.accuracy())
        throw ConfigError("run_setting: target session produced no scored trials");
      report.runs.push_back(RunRecord{seed, static_cast<int>(k), *result.accuracy(),
                                      result.n_scored});
    }
  }

  auto agg = aggregate_accuracy(report.runs);
  report.mean_accuracy = agg.first;
  report.std_accuracy = agg.second;
  report.wall_clock_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::vector<SweepEntry> sweep(SweepAxis axis, Setting setting, const Cohort& cohort,
                              const TrainConfig& base_train,
                              const AdaptationConfig& base_adapt,
                              const std::vector<uint64_t>& seeds) {
  std::vector<SweepEntry> out;
  ModelCache cache;

  auto run_point = [&](const std::string& name, const TrainConfig& tc,
                       const AdaptationConfig& ac) {
    ExperimentReport rep = run_setting(setting, cohort, tc, ac, seeds, &cache);
    rep.label = name;
    out.push_back(SweepEntry{name, std::move(rep)});
  };

  switch (axis) {
    case SweepAxis::buffer: {
      for (int b : {1, 2, 4, 8, 16, 32, 64, 128}) {
        AdaptationConfig ac = base_adapt;
        ac.buffer_size = b;
        run_point("buffer=" + std::to_string(b), base_train, ac);
      }
      break;
    }
    case SweepAxis::delta: {
      for (int i = 0; i <= 6; ++i) {
        double delta = 0.1 * i;
        TrainConfig tc = base_train;
        tc.label_smoothing = delta;
        std::ostringstream name;
        name << "delta=" << delta;
        run_point(name.str(), tc, base_adapt);
      }
      break;
    }
    case SweepAxis::grid: {
      struct Row {
        const char* name;
        AlignmentMethod align;
        WeightScheme scheme;
        BnMode bn;
        bool em;
        double delta;
      };
      const double best_delta = 0.4;
      const Row rows[] = {
          {"source", AlignmentMethod::none, WeightScheme::uniform, BnMode::source, false, 0.0},
          {"ea", AlignmentMethod::ea, WeightScheme::uniform, BnMode::source, false, 0.0},
          {"ea-linear", AlignmentMethod::ea, WeightScheme::linear, BnMode::source, false, 0.0},
          {"ea-ema", AlignmentMethod::ea, WeightScheme::ema, BnMode::source, false, 0.0},
          {"ra", AlignmentMethod::ra, WeightScheme::uniform, BnMode::source, false, 0.0},
          {"ra-linear", AlignmentMethod::ra, WeightScheme::linear, BnMode::source, false, 0.0},
          {"ra-ema", AlignmentMethod::ra, WeightScheme::ema, BnMode::source, false, 0.0},
          {"bn-1", AlignmentMethod::none, WeightScheme::uniform, BnMode::bn1, false, 0.0},
          {"bn-0.5", AlignmentMethod::none, WeightScheme::uniform, BnMode::bn_alpha, false, 0.0},
          {"bn-ema", AlignmentMethod::none, WeightScheme::uniform, BnMode::bn_ema, false, 0.0},
          {"ra-linear-bn-1", AlignmentMethod::ra, WeightScheme::linear, BnMode::bn1, false, 0.0},
          {"ra-ema-bn-1", AlignmentMethod::ra, WeightScheme::ema, BnMode::bn1, false, 0.0},
          {"ra-linear-bn-0.5", AlignmentMethod::ra, WeightScheme::linear, BnMode::bn_alpha, false, 0.0},
          {"ra-ema-bn-0.5", AlignmentMethod::ra, WeightScheme::ema, BnMode::bn_alpha, false, 0.0},
          {"ra-linear-bn-ema", AlignmentMethod::ra, WeightScheme::linear, BnMode::bn_ema, false, 0.0},
          {"ra-ema-bn-ema", AlignmentMethod::ra, WeightScheme::ema, BnMode::bn_ema, false, 0.0},
          {"ra-ema-bn-1-em-d0", AlignmentMethod::ra, WeightScheme::ema, BnMode::bn1, true, 0.0},
          {"ra-ema-bn-1-em-d0.4", AlignmentMethod::ra, WeightScheme::ema, BnMode::bn1, true, best_delta},
      };
      for (const Row& row : rows) {
        TrainConfig tc = base_train;
        tc.alignment_in_training = row.align;
        tc.label_smoothing = row.delta;
        AdaptationConfig ac = base_adapt;
        ac.alignment = row.align;
        ac.weighting = row.scheme;
        ac.bn_mode = row.bn;
        ac.bn_alpha = 0.5;
        ac.entropy_min = row.em;
        run_point(row.name, tc, ac);
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

nlohmann::ordered_json train_config_json(const TrainConfig& c) {
  return nlohmann::ordered_json{
      {"epochs", c.epochs},
      {"warmup_epochs", c.warmup_epochs},
      {"base_lr", c.base_lr},
      {"batch_size", c.batch_size},
      {"label_smoothing", c.label_smoothing},
      {"alignment_in_training", to_string(c.alignment_in_training)},
      {"center_covariance", c.center_covariance},
      {"temporal_filters", c.temporal_filters},
      {"depth_multiplier", c.depth_multiplier},
      {"pool", c.pool},
      {"dropout", c.dropout},
  };
}

nlohmann::ordered_json adapt_config_json(const AdaptationConfig& c) {
  return nlohmann::ordered_json{
      {"alignment", to_string(c.alignment)},
      {"weighting", to_string(c.weighting)},
      {"ema_momentum", c.ema_momentum},
      {"bn_mode", to_string(c.bn_mode)},
      {"bn_alpha", c.bn_alpha},
      {"bn_ema_rate", c.bn_ema_rate},
      {"entropy_min", c.entropy_min},
      {"buffer_size", c.buffer_size},
      {"lr", c.lr},
      {"param_scope", to_string(c.param_scope)},
      {"bn_warmup_floor", c.bn_warmup_floor},
      {"center_covariance", c.center_covariance},
  };
}

}  // namespace

void emit_report_json(const ExperimentReport& report, const std::string& path,
                      bool include_wallclock) {
  nlohmann::ordered_json j;
  j["label"] = report.label;
  j["setting"] = setting_name(report.setting);
  if (report.train_config_known)
    j["train_config"] = train_config_json(report.train_config);
  j["adapt_config"] = adapt_config_json(report.adapt_config);
  j["runs"] = nlohmann::ordered_json::array();
  for (const RunRecord& r : report.runs)
    j["runs"].push_back(nlohmann::ordered_json{{"seed", r.seed},
                                               {"subject", r.subject},
                                               {"accuracy", r.accuracy},
                                               {"n_scored", r.n_scored}});
  j["mean_accuracy"] = report.mean_accuracy;
  j["std_accuracy"] = report.std_accuracy;
  if (include_wallclock) j["wall_clock_sec"] = report.wall_clock_sec;

  std::ofstream f(path);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  f << j.dump(2) << "\n";
  if (!f) throw IoError(IoError::Kind::write_failed, "write failed: " + path);
}

namespace {

void csv_rows(std::ostream& os, const std::string& point, const ExperimentReport& rep) {
  os.precision(17);
  for (const RunRecord& r : rep.runs)
    os << point << "," << setting_name(rep.setting) << "," << r.seed << ","
       << r.subject << "," << r.accuracy << "," << r.n_scored << "\n";
}

}  // namespace

void emit_report_csv(const std::vector<SweepEntry>& entries, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  f << "point,setting,seed,subject,accuracy,n_scored\n";
  for (const SweepEntry& e : entries) csv_rows(f, e.point, e.report);
  if (!f) throw IoError(IoError::Kind::write_failed, "write failed: " + path);
}

void emit_report_csv(const ExperimentReport& report, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  f << "point,setting,seed,subject,accuracy,n_scored\n";
  csv_rows(f, report.label, report);
  if (!f) throw IoError(IoError::Kind::write_failed, "write failed: " + path);
}

// ---------------------------------------------------------------------------
// Default synthetic benchmark

Cohort make_benchmark_cohort(const BenchmarkOptions& opt) {
  Cohort cohort;
  cohort.n_classes = opt.n_classes;
  GeneratorSpec base = default_generator_spec(opt.n_channels, opt.n_samples,
                                              opt.n_classes, opt.sample_rate,
                                              opt.master_seed);
  base.noise_level = opt.noise_level;
  base.signal_amp = opt.signal_amp;
  if (opt.shared_band_hz > 0.0)
    for (auto& tpl : base.templates) tpl.freq_hz = opt.shared_band_hz;
  for (int k = 0; k < opt.n_subjects; ++k) {
    GeneratorSpec subject = derive_shifted_subject(
        base, opt.subject_shift, opt.master_seed * 1000 + 17 * (k + 1));
    SubjectData data;
    subject.seed = 0xABC0ull + 2ull * k;
    data.session1 = generate_subject(subject, opt.train_trials, true);
    subject.seed = 0xABC0ull + 2ull * k + 1;
    data.session2 = generate_subject(subject, opt.stream_trials, true);
    cohort.subjects.push_back(std::move(data));
  }
  return cohort;
}

TrainConfig benchmark_train_config() {
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.warmup_epochs = 15;
  cfg.base_lr = 2e-3;
  cfg.batch_size = 48;
  cfg.label_smoothing = 0.0;
  return cfg;
}

AdaptationConfig benchmark_adapt_config() {
  AdaptationConfig cfg;
  cfg.alignment = AlignmentMethod::ra;
  cfg.weighting = WeightScheme::ema;
  cfg.ema_momentum = 0.1;
  cfg.bn_mode = BnMode::bn1;
  cfg.entropy_min = true;
  cfg.buffer_size = 32;
  cfg.lr = 5e-4;
  cfg.param_scope = ParamScope::bn_affine;
  cfg.bn_warmup_floor = 8;
  return cfg;
}

}  // namespace otta
