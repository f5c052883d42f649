// Command line driver: dataset generation, source training, adaptation
// streams, and the sweep experiments.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "otta/checkpoint.hpp"
#include "otta/config.hpp"
#include "otta/harness.hpp"
#include "otta/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace otta;

std::vector<uint64_t> parse_seed_list(const std::string& s) {
  std::vector<uint64_t> seeds;
  std::string cur;
  for (char ch : s + ",") {
    if (ch == ',') {
      if (!cur.empty()) seeds.push_back(std::stoull(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

TrainConfig load_train_config(const std::string& path) {
  return path.empty() ? TrainConfig{} : parse_train_config(KeyValueFile::parse_file(path));
}

AdaptationConfig load_adapt_config(const std::string& path) {
  return path.empty() ? AdaptationConfig{}
                      : parse_adapt_config(KeyValueFile::parse_file(path));
}

int cmd_gen(const std::string& spec_path, const std::string& out_path, int trials,
            uint64_t seed_override, bool has_seed, double lowpass_hz) {
  GeneratorSpec spec = spec_path.empty()
                           ? default_generator_spec(22, 1000, 4, 250.0, 0)
                           : parse_gen_config(KeyValueFile::parse_file(spec_path));
  if (has_seed) spec.seed = seed_override;
  std::vector<Trial> data = generate_subject(spec, trials, true);
  if (lowpass_hz > 0.0)
    for (Trial& t : data) t = lowpass(t, lowpass_hz, spec.sample_rate);
  write_dataset(out_path, data, spec.n_classes, spec.sample_rate);
  std::printf("wrote %d trials (%dch x %d samples, %d classes) to %s\n", trials,
              spec.n_channels, spec.n_samples, spec.n_classes, out_path.c_str());
  return 0;
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_path, uint64_t seed,
              const std::string& val_path) {
  Dataset ds = read_dataset(data_path);
  TrainConfig cfg = load_train_config(config_path);
  Network net = train_source(ds.trials, ds.n_classes, cfg, seed);
  save_checkpoint_file(net, out_path);
  std::printf("trained on %zu trials, checkpoint -> %s\n", ds.trials.size(),
              out_path.c_str());
  if (!val_path.empty()) {
    Dataset val = read_dataset(val_path);
    double acc = evaluate_accuracy(net, val.trials, cfg.alignment_in_training);
    std::printf("validation accuracy: %.4f\n", acc);
  }
  return 0;
}

int cmd_run(const std::string& setting_name, const std::string& ckpt_path,
            const std::string& adapt_path, const std::string& eval_path,
            const std::string& phase1_path, const std::string& out_path,
            const std::string& csv_path) {
  AdaptationConfig cfg = load_adapt_config(adapt_path);
  Network net = load_checkpoint_file(ckpt_path);
  Dataset eval_ds = read_dataset(eval_path);

  Setting setting;
  StreamResult result;
  if (setting_name == "continual") {
    setting = Setting::continual;
    if (phase1_path.empty())
      throw ConfigError("run: --phase1 is required for the continual setting");
    Dataset phase1 = read_dataset(phase1_path);
    result = run_continual(std::move(net), cfg, phase1.trials, eval_ds.trials);
  } else {
    setting = setting_name == "cross-session" ? Setting::cross_session
                                              : Setting::cross_subject;
    result = run_stream(std::move(net), cfg, eval_ds.trials);
  }

  ExperimentReport report;
  report.label = setting_name;
  report.setting = setting;
  report.train_config_known = false;  // the checkpoint's recipe is not in the file
  report.adapt_config = cfg;
  if (result.accuracy())
    report.runs.push_back(RunRecord{0, 0, *result.accuracy(), result.n_scored});
  auto agg = aggregate_accuracy(report.runs);
  report.mean_accuracy = agg.first;
  report.std_accuracy = agg.second;
  emit_report_json(report, out_path);
  if (!csv_path.empty()) emit_report_csv(report, csv_path);

  if (result.accuracy())
    std::printf("streamed %zu trials, accuracy %.4f -> %s\n", result.records.size(),
                *result.accuracy(), out_path.c_str());
  else
    std::printf("streamed %zu trials (no labels to score) -> %s\n",
                result.records.size(), out_path.c_str());
  return 0;
}

int cmd_sweep(const std::string& axis_name, const std::string& setting_name,
              const std::string& train_path, const std::string& adapt_path,
              const std::string& seeds_str, int subjects, const std::string& csv_path,
              const std::string& json_dir) {
  SweepAxis axis;
  if (axis_name == "buffer") axis = SweepAxis::buffer;
  else if (axis_name == "delta") axis = SweepAxis::delta;
  else if (axis_name == "grid") axis = SweepAxis::grid;
  else throw ConfigError("sweep: unknown axis '" + axis_name + "'");

  Setting setting = setting_name == "cross-session" ? Setting::cross_session
                    : setting_name == "continual"   ? Setting::continual
                                                    : Setting::cross_subject;

  TrainConfig train_cfg =
      train_path.empty() ? benchmark_train_config() : load_train_config(train_path);
  AdaptationConfig adapt_cfg =
      adapt_path.empty() ? benchmark_adapt_config() : load_adapt_config(adapt_path);

  BenchmarkOptions opt;
  opt.n_subjects = subjects;
  Cohort cohort = make_benchmark_cohort(opt);

  std::vector<uint64_t> seeds = parse_seed_list(seeds_str);
  std::vector<SweepEntry> entries =
      sweep(axis, setting, cohort, train_cfg, adapt_cfg, seeds);
  emit_report_csv(entries, csv_path);
  std::printf("%-24s %10s %10s\n", "point", "mean", "std");
  for (const SweepEntry& e : entries) {
    std::printf("%-24s %10.4f %10.4f\n", e.point.c_str(), e.report.mean_accuracy,
                e.report.std_accuracy);
    if (!json_dir.empty())
      emit_report_json(e.report, json_dir + "/" + e.point + ".json");
  }
  std::printf("rows -> %s\n", csv_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online test-time adaptation for multichannel time-series decoding"};
  app.require_subcommand(1);

  int threads = 0;
  std::string backend = "parallel";
  app.add_option("--threads", threads, "OpenMP thread count (0 = library default)");
  app.add_option("--backend", backend, "kernel backend: serial|parallel")
      ->check(CLI::IsMember({"serial", "parallel"}));

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  std::string gen_spec, gen_out;
  int gen_trials = 288;
  uint64_t gen_seed = 0;
  double gen_lowpass = 0.0;
  gen->add_option("--spec", gen_spec, "generator config file");
  gen->add_option("--out", gen_out, "output dataset path")->required();
  gen->add_option("--trials", gen_trials, "number of trials (default 288)");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "override generator seed");
  gen->add_option("--lowpass", gen_lowpass,
                  "apply a zero-phase lowpass at this cutoff (Hz) on ingest");

  // train
  auto* train = app.add_subcommand("train", "train a source model");
  std::string train_data, train_config, train_out, train_val;
  uint64_t train_seed = 0;
  train->add_option("--data", train_data, "training dataset")->required();
  train->add_option("--config", train_config, "training config file");
  train->add_option("--out", train_out, "output checkpoint")->required();
  train->add_option("--seed", train_seed, "training seed (default 0)");
  train->add_option("--val", train_val, "optional held-out dataset to score");

  // run
  auto* run = app.add_subcommand("run", "stream a dataset through the adaptation engine");
  std::string run_setting = "cross-subject", run_ckpt, run_adapt, run_eval,
              run_phase1, run_out = "report.json", run_csv;
  run->add_option("--setting", run_setting, "cross-session|cross-subject|continual")
      ->check(CLI::IsMember({"cross-session", "cross-subject", "continual"}));
  run->add_option("--ckpt", run_ckpt, "source checkpoint")->required();
  run->add_option("--adapt-config", run_adapt, "adaptation config file");
  run->add_option("--eval", run_eval, "dataset to adapt/evaluate on")->required();
  run->add_option("--phase1", run_phase1, "first adaptation phase (continual only)");
  run->add_option("--out", run_out, "output report (json)");
  run->add_option("--csv", run_csv, "optional per-run csv");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run a sweep on the synthetic benchmark");
  std::string sw_axis, sw_setting = "cross-subject", sw_train, sw_adapt,
              sw_seeds = "0,1,2,3,4", sw_csv = "sweep.csv", sw_json_dir;
  int sw_subjects = 2;
  sw->add_option("--axis", sw_axis, "buffer|delta|grid")->required()
      ->check(CLI::IsMember({"buffer", "delta", "grid"}));
  sw->add_option("--setting", sw_setting, "cross-session|cross-subject|continual")
      ->check(CLI::IsMember({"cross-session", "cross-subject", "continual"}));
  sw->add_option("--train-config", sw_train, "training config file");
  sw->add_option("--adapt-config", sw_adapt, "adaptation config file");
  sw->add_option("--seeds", sw_seeds, "comma-separated seeds (default 0,1,2,3,4)");
  sw->add_option("--subjects", sw_subjects, "synthetic subjects (default 2)");
  sw->add_option("--out", sw_csv, "output csv (default sweep.csv)");
  sw->add_option("--json-dir", sw_json_dir, "optional directory for per-point json");

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#endif
  otta::kernels::set_backend(backend == "serial" ? otta::kernels::Backend::serial
                                                 : otta::kernels::Backend::parallel);

  try {
    if (*gen)
      return cmd_gen(gen_spec, gen_out, gen_trials, gen_seed, !gen_seed_opt->empty(),
                     gen_lowpass);
    if (*train) return cmd_train(train_data, train_config, train_out, train_seed, train_val);
    if (*run)
      return cmd_run(run_setting, run_ckpt, run_adapt, run_eval, run_phase1, run_out,
                     run_csv);
    if (*sw)
      return cmd_sweep(sw_axis, sw_setting, sw_train, sw_adapt, sw_seeds, sw_subjects,
                       sw_csv, sw_json_dir);
  } catch (const otta::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
