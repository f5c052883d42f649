#include "otta/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "otta/kernels.hpp"
#include "otta/spd.hpp"

namespace otta {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

double condition_number(const Matrix& m) {
  Matrix mmt(m.rows(), m.rows());
  kernels::serial::xxt(m.data(), mmt.data(), m.rows(), m.cols());
  EigDecomp eig = sym_eig(mmt);
  double lo = eig.eigenvalues.front(), hi = eig.eigenvalues.back();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(hi / lo);
}

Matrix effective_transform(const GeneratorSpec& spec) {
  Matrix t = spec.mixing;
  for (int r = 0; r < t.rows(); ++r)
    for (int c = 0; c < t.cols(); ++c) t(r, c) *= spec.gains[r];
  return t;
}

// Givens rotation applied from the left on rows (i, j).
void rotate_rows(Matrix& m, int i, int j, double angle) {
  double cs = std::cos(angle), sn = std::sin(angle);
  for (int c = 0; c < m.cols(); ++c) {
    double a = m(i, c), b = m(j, c);
    m(i, c) = cs * a - sn * b;
    m(j, c) = sn * a + cs * b;
  }
}

}  // namespace

void GeneratorSpec::validate() const {
  if (n_channels < 1 || n_samples < 1 || n_classes < 2)
    throw ConfigError("GeneratorSpec: need channels >= 1, samples >= 1, classes >= 2");
  if (sample_rate <= 0.0) throw ConfigError("GeneratorSpec: sample_rate must be positive");
  if (static_cast<int>(templates.size()) != n_classes)
    throw ConfigError("GeneratorSpec: one template per class required");
  for (const auto& t : templates) {
    if (static_cast<int>(t.pattern.size()) != n_channels)
      throw ConfigError("GeneratorSpec: template pattern length != n_channels");
    if (t.freq_hz <= 0.0 || t.freq_hz >= sample_rate / 2.0)
      throw ConfigError("GeneratorSpec: template frequency outside (0, Nyquist)");
  }
  for (int a = 0; a < n_classes; ++a)
    for (int b = a + 1; b < n_classes; ++b) {
      double d = std::abs(templates[a].freq_hz - templates[b].freq_hz);
      for (int c = 0; c < n_channels; ++c)
        d += std::abs(templates[a].pattern[c] - templates[b].pattern[c]);
      if (d == 0.0)
        throw ConfigError("GeneratorSpec: templates for two classes are identical");
    }
  if (mixing.rows() != n_channels || mixing.cols() != n_channels)
    throw ConfigError("GeneratorSpec: mixing must be C x C");
  if (static_cast<int>(gains.size()) != n_channels ||
      static_cast<int>(bias.size()) != n_channels)
    throw ConfigError("GeneratorSpec: gains/bias must have length C");
  if (noise_level < 0.0) throw ConfigError("GeneratorSpec: negative noise level");
  double cond = condition_number(effective_transform(*this));
  if (!(cond <= condition_cap)) {
    std::ostringstream os;
    os << "GeneratorSpec: transform condition number " << cond << " exceeds cap "
       << condition_cap;
    throw ConfigError(os.str());
  }
}

GeneratorSpec default_generator_spec(int n_channels, int n_samples, int n_classes,
                                     double sample_rate, uint64_t seed) {
  GeneratorSpec spec;
  spec.n_channels = n_channels;
  spec.n_samples = n_samples;
  spec.n_classes = n_classes;
  spec.sample_rate = sample_rate;
  spec.seed = seed;
  spec.gains.assign(n_channels, 1.0);
  spec.bias.assign(n_channels, 0.0);

  Rng rng(seed ^ 0x5eedULL);

  // near-orthogonal class patterns via Gram-Schmidt; once the channel space
  // is exhausted (classes > C) plain normalized directions are used and the
  // oscillation bands carry the distinction
  std::vector<std::vector<double>> basis;
  for (int k = 0; k < n_classes; ++k) {
    std::vector<double> v(n_channels);
    for (double& x : v) x = rng.normal();
    if (k < n_channels) {
      for (const auto& b : basis) {
        double dot = 0.0;
        for (int c = 0; c < n_channels; ++c) dot += v[c] * b[c];
        for (int c = 0; c < n_channels; ++c) v[c] -= dot * b[c];
      }
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-9) throw ConfigError("default_generator_spec: degenerate pattern");
    for (double& x : v) x /= norm;
    if (k < n_channels) basis.push_back(v);

    ClassTemplate t;
    t.pattern = v;
    // distinct bands spread over (6, 24) Hz scaled to the Nyquist range
    double base = sample_rate / 250.0;
    t.freq_hz = base * (6.0 + 5.0 * k);
    while (t.freq_hz >= sample_rate / 2.0) t.freq_hz *= 0.5;
    spec.templates.push_back(std::move(t));
  }

  // mild random channel mixing: identity plus a few small-plane rotations
  spec.mixing = Matrix::identity(n_channels);
  if (n_channels > 1) {
    for (int k = 0; k < n_channels; ++k) {
      int i = static_cast<int>(rng.uniform_index(n_channels));
      int j = static_cast<int>(rng.uniform_index(n_channels - 1));
      if (j >= i) ++j;
      rotate_rows(spec.mixing, i, j, rng.uniform(-0.4, 0.4));
    }
  }
  return spec;
}

std::vector<Trial> generate_subject(const GeneratorSpec& spec, int n_trials,
                                    bool balance) {
  spec.validate();
  if (n_trials < 1) throw ConfigError("generate_subject: n_trials must be >= 1");
  if (balance && n_trials < spec.n_classes)
    throw ConfigError("generate_subject: balanced set needs n_trials >= n_classes");

  const int C = spec.n_channels, T = spec.n_samples;
  Rng rng(spec.seed);

  std::vector<int> labels(n_trials);
  if (balance) {
    for (int i = 0; i < n_trials; ++i) labels[i] = i % spec.n_classes;
    for (int i = n_trials - 1; i > 0; --i) {
      int j = static_cast<int>(rng.uniform_index(static_cast<uint64_t>(i) + 1));
      std::swap(labels[i], labels[j]);
    }
  } else {
    for (int i = 0; i < n_trials; ++i)
      labels[i] = static_cast<int>(rng.uniform_index(spec.n_classes));
  }

  std::vector<Trial> trials;
  trials.reserve(n_trials);
  Matrix source(C, T), mixed(C, T);
  for (int i = 0; i < n_trials; ++i) {
    const ClassTemplate& tpl = spec.templates[labels[i]];
    double phase = rng.uniform(0.0, kTwoPi);
    for (int t = 0; t < T; ++t) {
      double osc = spec.signal_amp *
                   std::sin(kTwoPi * tpl.freq_hz * t / spec.sample_rate + phase);
      for (int c = 0; c < C; ++c) source(c, t) = tpl.pattern[c] * osc;
    }
    if (spec.noise_level > 0.0)
      for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) source(c, t) += spec.noise_level * rng.normal();

    kernels::matmul(spec.mixing.data(), source.data(), mixed.data(), C, C, T);

    Trial trial;
    trial.data = Matrix(C, T);
    for (int c = 0; c < C; ++c)
      for (int t = 0; t < T; ++t)
        trial.data(c, t) = spec.gains[c] * mixed(c, t) + spec.bias[c];
    trial.label = labels[i];
    trial.trial_id = static_cast<uint64_t>(i) + 1;
    trials.push_back(std::move(trial));
  }
  return trials;
}

ShiftSpec reference_shift(ShiftSpec::Kind kind) {
  switch (kind) {
    case ShiftSpec::Kind::rotation: return {kind, 4.0, 0.0, 0.0};
    case ShiftSpec::Kind::gain: return {kind, 0.0, 4.0, 0.0};
    case ShiftSpec::Kind::bias: return {kind, 0.0, 0.0, 1.0};
    default: return {kind, 0.25, 4.0, 0.05};
  }
}

GeneratorSpec derive_shifted_subject(const GeneratorSpec& spec, const ShiftSpec& shift,
                                     uint64_t seed) {
  GeneratorSpec out = spec;
  if (shift.kind == ShiftSpec::Kind::none) return out;
  if (shift.rotation_budget < 0.0 || shift.gain_range < 0.0 || shift.bias_scale < 0.0)
    throw ConfigError("derive_shifted_subject: shift magnitudes must be >= 0");

  Rng rng(seed ^ 0xd1f7ULL);
  const int C = spec.n_channels;
  const bool do_rot = shift.kind == ShiftSpec::Kind::rotation ||
                      shift.kind == ShiftSpec::Kind::combined;
  const bool do_gain = shift.kind == ShiftSpec::Kind::gain ||
                       shift.kind == ShiftSpec::Kind::combined;
  const bool do_bias = shift.kind == ShiftSpec::Kind::bias ||
                       shift.kind == ShiftSpec::Kind::combined;

  if (do_rot && shift.rotation_budget > 0.0 && C > 1) {
    int planes = std::max(1, C / 2);
    double per_plane = shift.rotation_budget / planes;
    for (int k = 0; k < planes; ++k) {
      int i = static_cast<int>(rng.uniform_index(C));
      int j = static_cast<int>(rng.uniform_index(C - 1));
      if (j >= i) ++j;
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      rotate_rows(out.mixing, i, j, sign * per_plane);
    }
  }
  if (do_gain && shift.gain_range > 0.0) {
    double span = std::log1p(shift.gain_range);
    for (int c = 0; c < C; ++c)
      out.gains[c] *= std::exp(rng.uniform(-span, span));
  }
  if (do_bias && shift.bias_scale > 0.0) {
    for (int c = 0; c < C; ++c)
      out.bias[c] += shift.bias_scale * spec.signal_amp * rng.normal();
  }
  out.validate();
  return out;
}

Trial lowpass(const Trial& trial, double cutoff_hz, double sample_rate) {
  if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate / 2.0)
    throw ConfigError("lowpass: cutoff must be in (0, sample_rate/2)");
  const int taps = 101;
  const int half = taps / 2;
  const double fc = cutoff_hz / sample_rate;  // cycles per sample

  std::vector<double> h(taps);
  double sum = 0.0;
  for (int k = 0; k < taps; ++k) {
    int m = k - half;
    double sinc = m == 0 ? 2.0 * fc : std::sin(kTwoPi * fc * m) / (3.14159265358979323846 * m);
    double window = 0.54 - 0.46 * std::cos(kTwoPi * k / (taps - 1));  // Hamming
    h[k] = sinc * window;
    sum += h[k];
  }
  for (double& v : h) v /= sum;  // unit DC gain

  const int C = trial.data.rows(), T = trial.data.cols();
  Trial out;
  out.data = Matrix(C, T);
  out.label = trial.label;
  out.trial_id = trial.trial_id;

  auto reflect = [T](int idx) {
    while (idx < 0 || idx >= T) {
      if (idx < 0) idx = -idx;
      if (idx >= T) idx = 2 * (T - 1) - idx;
      if (T == 1) return 0;
    }
    return idx;
  };

  for (int c = 0; c < C; ++c)
    for (int t = 0; t < T; ++t) {
      double acc = 0.0;
      for (int k = 0; k < taps; ++k) acc += h[k] * trial.data(c, reflect(t + k - half));
      out.data(c, t) = acc;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Dataset files

namespace {

constexpr uint16_t kDatasetVersion = 1;

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

}  // namespace

void write_dataset(const std::string& path, const std::vector<Trial>& trials,
                   int n_classes, double sample_rate) {
  if (trials.empty()) throw ConfigError("write_dataset: no trials");
  const int C = trials.front().data.rows(), T = trials.front().data.cols();
  for (const Trial& t : trials) {
    if (t.data.rows() != C || t.data.cols() != T)
      throw DimensionError("write_dataset: inhomogeneous trial shapes");
    if (t.label && (*t.label < 0 || *t.label >= n_classes))
      throw ConfigError("write_dataset: label outside [0, n_classes)");
  }

  std::string out;
  out += "OTTD";
  put_u16(out, kDatasetVersion);
  put_u32(out, static_cast<uint32_t>(C));
  put_u32(out, static_cast<uint32_t>(T));
  put_u32(out, static_cast<uint32_t>(n_classes));
  put_u32(out, static_cast<uint32_t>(trials.size()));
  put_f32(out, static_cast<float>(sample_rate));
  for (const Trial& t : trials) {
    out.push_back(t.label ? static_cast<char>(*t.label) : static_cast<char>(0xff));
    for (int c = 0; c < C; ++c)
      for (int s = 0; s < T; ++s) put_f32(out, static_cast<float>(t.data(c, s)));
  }

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError(IoError::Kind::write_failed, "write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  size_t pos = 0;
  auto need = [&](size_t n) {
    if (pos + n > bytes.size())
      throw IoError(IoError::Kind::truncated, "dataset: truncated file " + path);
  };
  auto get_u16 = [&]() {
    need(2);
    uint16_t v = static_cast<uint8_t>(bytes[pos]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(bytes[pos + 1])) << 8);
    pos += 2;
    return v;
  };
  auto get_u32 = [&]() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  };
  auto get_f32 = [&]() {
    uint32_t bits = get_u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  };

  need(4);
  if (bytes.compare(0, 4, "OTTD") != 0)
    throw IoError(IoError::Kind::bad_magic, "dataset: bad magic in " + path);
  pos = 4;
  uint16_t version = get_u16();
  if (version != kDatasetVersion)
    throw IoError(IoError::Kind::bad_version,
                  "dataset: unsupported version " + std::to_string(version));

  Dataset ds;
  ds.n_channels = static_cast<int>(get_u32());
  ds.n_samples = static_cast<int>(get_u32());
  ds.n_classes = static_cast<int>(get_u32());
  uint32_t n_trials = get_u32();
  ds.sample_rate = get_f32();
  if (ds.n_channels < 1 || ds.n_samples < 1 || ds.n_classes < 1)
    throw IoError(IoError::Kind::bad_field, "dataset: invalid header extents");

  const size_t per_trial =
      1 + 4ull * ds.n_channels * ds.n_samples;
  if (bytes.size() - pos != per_trial * n_trials)
    throw IoError(IoError::Kind::bad_length,
                  "dataset: payload length does not match header");

  ds.trials.reserve(n_trials);
  for (uint32_t i = 0; i < n_trials; ++i) {
    need(1);
    uint8_t label = static_cast<uint8_t>(bytes[pos++]);
    Trial t;
    if (label != 0xff) {
      if (label >= ds.n_classes)
        throw IoError(IoError::Kind::bad_field,
                      "dataset: label " + std::to_string(label) + " outside [0, " +
                          std::to_string(ds.n_classes) + ")");
      t.label = label;
    }
    t.data = Matrix(ds.n_channels, ds.n_samples);
    for (int c = 0; c < ds.n_channels; ++c)
      for (int s = 0; s < ds.n_samples; ++s) t.data(c, s) = get_f32();
    t.trial_id = i + 1;
    ds.trials.push_back(std::move(t));
  }
  return ds;
}

}  // namespace otta
