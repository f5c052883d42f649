#pragma once

#include <map>
#include <set>
#include <string>

#include "otta/common.hpp"
#include "otta/dataio.hpp"
#include "otta/engine.hpp"
#include "otta/harness.hpp"

namespace otta {

/// Flat `key = value` config file. `#` starts a comment. Every key has a
/// documented default; keys the consumer never asked for are rejected by
/// finish(), so typos fail loudly.
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_string(const std::string& text, const std::string& origin = "<string>");

  std::string get_string(const std::string& key, const std::string& def);
  int get_int(const std::string& key, int def);
  uint64_t get_u64(const std::string& key, uint64_t def);
  double get_double(const std::string& key, double def);
  bool get_bool(const std::string& key, bool def);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Throws ConfigError naming any key that was present but never consumed.
  void finish() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
  std::string origin_;
};

/// Config-file adapters. Each consumes its documented keys and calls
/// finish(), so the file must contain nothing else.
AdaptationConfig parse_adapt_config(KeyValueFile file);
TrainConfig parse_train_config(KeyValueFile file);
GeneratorSpec parse_gen_config(KeyValueFile file);

AlignmentMethod parse_alignment_method(const std::string& s);
WeightScheme parse_weight_scheme(const std::string& s);
BnMode parse_bn_mode(const std::string& s);
ParamScope parse_param_scope(const std::string& s);

std::string to_string(AlignmentMethod m);
std::string to_string(WeightScheme s);
std::string to_string(BnMode m);
std::string to_string(ParamScope s);

}  // namespace otta
