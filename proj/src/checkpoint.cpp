#include "otta/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace otta {

namespace {

constexpr uint16_t kVersion = 1;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<uint8_t>& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  explicit Reader(const std::vector<uint8_t>& b) : bytes_(b) {}

  uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  uint16_t u16() {
    need(2);
    uint16_t v = bytes_[pos_] | (static_cast<uint16_t>(bytes_[pos_ + 1]) << 8);
    pos_ += 2;
    return v;
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(size_t len) {
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), len);
    pos_ += len;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) {
    if (pos_ + n > bytes_.size())
      throw IoError(IoError::Kind::truncated, "checkpoint: truncated stream");
  }
  const std::vector<uint8_t>& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::vector<uint8_t> save_checkpoint(const Network& net) {
  std::vector<uint8_t> out;
  out.insert(out.end(), {'O', 'T', 'T', 'A'});
  put_u16(out, kVersion);

  const ArchConfig& c = net.config();
  put_u32(out, static_cast<uint32_t>(c.n_channels));
  put_u32(out, static_cast<uint32_t>(c.n_samples));
  put_u32(out, static_cast<uint32_t>(c.n_classes));
  put_u32(out, static_cast<uint32_t>(c.temporal_filters));
  put_u32(out, static_cast<uint32_t>(c.depth_multiplier));
  put_u32(out, static_cast<uint32_t>(c.kernel_length));
  put_u32(out, static_cast<uint32_t>(c.pool));
  put_f32(out, c.dropout);
  put_f32(out, c.bn_momentum);

  auto params = net.parameters();
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const Param* p : params) {
    put_u16(out, static_cast<uint16_t>(p->name.size()));
    out.insert(out.end(), p->name.begin(), p->name.end());
    out.push_back(static_cast<uint8_t>(p->shape.size()));
    for (int d : p->shape) put_u32(out, static_cast<uint32_t>(d));
    for (float v : p->value) put_f32(out, v);
  }
  return out;
}

Network load_checkpoint(const std::vector<uint8_t>& bytes) {
  Reader r(bytes);
  if (r.str(4) != "OTTA")
    throw IoError(IoError::Kind::bad_magic, "checkpoint: bad magic");
  uint16_t version = r.u16();
  if (version != kVersion)
    throw IoError(IoError::Kind::bad_version,
                  "checkpoint: unsupported version " + std::to_string(version));

  ArchConfig c;
  c.n_channels = static_cast<int>(r.u32());
  c.n_samples = static_cast<int>(r.u32());
  c.n_classes = static_cast<int>(r.u32());
  c.temporal_filters = static_cast<int>(r.u32());
  c.depth_multiplier = static_cast<int>(r.u32());
  c.kernel_length = static_cast<int>(r.u32());
  c.pool = static_cast<int>(r.u32());
  c.dropout = r.f32();
  c.bn_momentum = r.f32();

  Network net(c, 0);
  auto params = net.parameters();
  uint32_t count = r.u32();
  if (count != params.size())
    throw IoError(IoError::Kind::shape_mismatch,
                  "checkpoint: parameter count does not match architecture");

  for (Param* p : params) {
    std::string name = r.str(r.u16());
    if (name != p->name)
      throw IoError(IoError::Kind::shape_mismatch,
                    "checkpoint: unexpected parameter '" + name + "', wanted '" +
                        p->name + "'");
    uint8_t ndim = r.u8();
    if (ndim != p->shape.size())
      throw IoError(IoError::Kind::shape_mismatch,
                    "checkpoint: rank mismatch for " + name);
    for (size_t i = 0; i < p->shape.size(); ++i)
      if (r.u32() != static_cast<uint32_t>(p->shape[i]))
        throw IoError(IoError::Kind::shape_mismatch,
                      "checkpoint: shape mismatch for " + name);
    for (float& v : p->value) v = r.f32();
  }
  if (!r.at_end())
    throw IoError(IoError::Kind::bad_length, "checkpoint: trailing bytes");
  return net;
}

void save_checkpoint_file(const Network& net, const std::string& path) {
  auto bytes = save_checkpoint(net);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError(IoError::Kind::write_failed, "write failed: " + path);
}

Network load_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError(IoError::Kind::open_failed, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return load_checkpoint(bytes);
}

}  // namespace otta
