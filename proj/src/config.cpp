#include "otta/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace otta {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_string(ss.str(), path);
}

KeyValueFile KeyValueFile::parse_string(const std::string& text,
                                        const std::string& origin) {
  KeyValueFile kv;
  kv.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.values_.count(key))
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                        key + "'");
    kv.values_[key] = value;
  }
  return kv;
}

std::string KeyValueFile::get_string(const std::string& key, const std::string& def) {
  consumed_.insert(key);
  auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

int KeyValueFile::get_int(const std::string& key, int def) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  try {
    size_t used = 0;
    int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" +
                      it->second + "'");
  }
}

uint64_t KeyValueFile::get_u64(const std::string& key, uint64_t def) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  try {
    size_t used = 0;
    unsigned long long v = std::stoull(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an unsigned integer: '" +
                      it->second + "'");
  }
}

double KeyValueFile::get_double(const std::string& key, double def) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" +
                      it->second + "'");
  }
}

bool KeyValueFile::get_bool(const std::string& key, bool def) {
  consumed_.insert(key);
  auto it = values_.find(key);
  if (it == values_.end()) return def;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(origin_ + ": key '" + key + "' is not a boolean: '" + it->second +
                    "'");
}

void KeyValueFile::finish() const {
  std::string unknown;
  for (const auto& [key, value] : values_)
    if (!consumed_.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
  if (!unknown.empty())
    throw ConfigError(origin_ + ": unknown keys: " + unknown);
}

// ---------------------------------------------------------------------------
// enum parsing

AlignmentMethod parse_alignment_method(const std::string& s) {
  if (s == "none") return AlignmentMethod::none;
  if (s == "ea") return AlignmentMethod::ea;
  if (s == "ra") return AlignmentMethod::ra;
  throw ConfigError("unknown alignment method '" + s + "' (none|ea|ra)");
}

WeightScheme parse_weight_scheme(const std::string& s) {
  if (s == "uniform") return WeightScheme::uniform;
  if (s == "linear") return WeightScheme::linear;
  if (s == "ema") return WeightScheme::ema;
  throw ConfigError("unknown weighting scheme '" + s + "' (uniform|linear|ema)");
}

BnMode parse_bn_mode(const std::string& s) {
  if (s == "source") return BnMode::source;
  if (s == "bn1") return BnMode::bn1;
  if (s == "bn_alpha") return BnMode::bn_alpha;
  if (s == "bn_ema") return BnMode::bn_ema;
  throw ConfigError("unknown bn mode '" + s + "' (source|bn1|bn_alpha|bn_ema)");
}

ParamScope parse_param_scope(const std::string& s) {
  if (s == "bn_affine") return ParamScope::bn_affine;
  if (s == "all") return ParamScope::all;
  throw ConfigError("unknown param scope '" + s + "' (bn_affine|all)");
}

std::string to_string(AlignmentMethod m) {
  switch (m) {
    case AlignmentMethod::none: return "none";
    case AlignmentMethod::ea: return "ea";
    case AlignmentMethod::ra: return "ra";
  }
  return "?";
}

std::string to_string(WeightScheme s) {
  switch (s) {
    case WeightScheme::uniform: return "uniform";
    case WeightScheme::linear: return "linear";
    case WeightScheme::ema: return "ema";
  }
  return "?";
}

std::string to_string(BnMode m) {
  switch (m) {
    case BnMode::source: return "source";
    case BnMode::bn1: return "bn1";
    case BnMode::bn_alpha: return "bn_alpha";
    case BnMode::bn_ema: return "bn_ema";
  }
  return "?";
}

std::string to_string(ParamScope s) {
  return s == ParamScope::bn_affine ? "bn_affine" : "all";
}

// ---------------------------------------------------------------------------
// config-file adapters

AdaptationConfig parse_adapt_config(KeyValueFile file) {
  AdaptationConfig cfg;
  cfg.alignment = parse_alignment_method(file.get_string("alignment", "none"));
  cfg.weighting = parse_weight_scheme(file.get_string("weighting", "uniform"));
  cfg.ema_momentum = file.get_double("ema_momentum", 0.1);
  cfg.bn_mode = parse_bn_mode(file.get_string("bn_mode", "source"));
  cfg.bn_alpha = file.get_double("bn_alpha", 0.5);
  cfg.bn_ema_rate = file.get_double("bn_ema_rate", 0.1);
  cfg.entropy_min = file.get_bool("entropy_min", false);
  cfg.buffer_size = file.get_int("buffer_size", 32);
  cfg.lr = file.get_double("lr", 5e-4);
  cfg.param_scope = parse_param_scope(file.get_string("param_scope", "bn_affine"));
  cfg.bn_warmup_floor = file.get_int("bn_warmup_floor", 8);
  cfg.center_covariance = file.get_bool("center_covariance", false);
  file.finish();
  cfg.validate();
  return cfg;
}

TrainConfig parse_train_config(KeyValueFile file) {
  TrainConfig cfg;
  cfg.epochs = file.get_int("epochs", 1000);
  cfg.warmup_epochs = file.get_int("warmup_epochs", 20);
  cfg.base_lr = file.get_double("base_lr", 1e-3);
  cfg.batch_size = file.get_int("batch_size", 64);
  cfg.label_smoothing = file.get_double("label_smoothing", 0.0);
  cfg.alignment_in_training =
      parse_alignment_method(file.get_string("alignment_in_training", "none"));
  cfg.center_covariance = file.get_bool("center_covariance", false);
  cfg.temporal_filters = file.get_int("temporal_filters", 8);
  cfg.depth_multiplier = file.get_int("depth_multiplier", 2);
  cfg.pool = file.get_int("pool", 8);
  cfg.dropout = file.get_double("dropout", 0.25);
  file.finish();
  cfg.validate();
  return cfg;
}

GeneratorSpec parse_gen_config(KeyValueFile file) {
  int channels = file.get_int("channels", 22);
  int samples = file.get_int("samples", 1000);
  int classes = file.get_int("classes", 4);
  double rate = file.get_double("sample_rate", 250.0);
  uint64_t seed = file.get_u64("seed", 0);
  GeneratorSpec spec = default_generator_spec(channels, samples, classes, rate, seed);
  spec.noise_level = file.get_double("noise", 0.5);
  spec.signal_amp = file.get_double("amplitude", 1.0);
  spec.condition_cap = file.get_double("condition_cap", 100.0);

  std::string shift_kind = file.get_string("shift", "none");
  ShiftSpec shift;
  shift.rotation_budget = file.get_double("shift_rotation", shift.rotation_budget);
  shift.gain_range = file.get_double("shift_gain", shift.gain_range);
  shift.bias_scale = file.get_double("shift_bias", shift.bias_scale);
  uint64_t shift_seed = file.get_u64("shift_seed", seed + 1);
  file.finish();

  if (shift_kind == "none") return spec;
  if (shift_kind == "rotation") shift.kind = ShiftSpec::Kind::rotation;
  else if (shift_kind == "gain") shift.kind = ShiftSpec::Kind::gain;
  else if (shift_kind == "bias") shift.kind = ShiftSpec::Kind::bias;
  else if (shift_kind == "combined") shift.kind = ShiftSpec::Kind::combined;
  else throw ConfigError("unknown shift '" + shift_kind +
                         "' (none|rotation|gain|bias|combined)");
  return derive_shifted_subject(spec, shift, shift_seed);
}

}  // namespace otta
