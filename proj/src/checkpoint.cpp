// SPDX-FileCopyrightText: Copyright (c) 2026 The csrnet authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0

// Checkpoint layout (all integers little-endian):
//   "CSRN" | u16 version | u8 scale | u16 features | u16 n_pairs | u16 tap_src |
//   u16 tap_dst | u8 variant | u32 entry count |
//   per entry: u16 name length, name bytes, u8 dtype (0 = f32), u8 rank,
//              rank x u32 extents, raw f32 payload |
//   u64 FNV-1a of every preceding byte.

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <unordered_map>

#include "csrnet/model.hpp"

namespace csrnet {
namespace {

constexpr unsigned char kMagic[4] = {'C', 'S', 'R', 'N'};
constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 2 * 4 + 1 + 4;

static_assert(std::numeric_limits<float>::is_iec559);

class Writer {
 public:
  template <typename U>
  void put(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xFF));
    }
  }
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  void f32(float v) { put(std::bit_cast<std::uint32_t>(v)); }
  std::vector<unsigned char>& buffer() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const unsigned char* data, std::size_t len) : data_(data), len_(len) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(get<std::uint32_t>()); }
  std::size_t remaining() const { return len_ - pos_; }

 private:
  void need(std::size_t n) const {
    if (len_ - pos_ < n) throw IntegrityError("checkpoint truncated or malformed");
  }
  const unsigned char* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
};

template <typename U>
U narrow(std::size_t v, const char* what) {
  if (v > std::numeric_limits<U>::max()) {
    throw ConfigError(std::string("checkpoint field '") + what + "' out of range");
  }
  return static_cast<U>(v);
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct RawEntry {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Decoded {
  std::uint16_t version = 0;
  CsrnetConfig config;
  std::vector<RawEntry> entries;
};

Shape make_shape(const std::vector<std::size_t>& dims) {
  switch (dims.size()) {
    case 1: return {dims[0]};
    case 2: return {dims[0], dims[1]};
    case 3: return {dims[0], dims[1], dims[2]};
    case 4: return {dims[0], dims[1], dims[2], dims[3]};
    default: throw IntegrityError("checkpoint tensor rank " + std::to_string(dims.size()));
  }
}

Decoded decode(const std::vector<unsigned char>& bytes, bool with_payload) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw IntegrityError("not a csrnet checkpoint (bad magic)");
  }
  Decoded d;
  d.version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (d.version != kCheckpointVersion) {
    throw UnsupportedVersionError("checkpoint version " + std::to_string(d.version) +
                                  " is not supported (expected " +
                                  std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < kHeaderBytes + 8) throw IntegrityError("checkpoint truncated");
  const std::size_t body = bytes.size() - 8;
  Reader tail(bytes.data() + body, 8);
  if (tail.get<std::uint64_t>() != fnv1a64(bytes.data(), body)) {
    throw IntegrityError("checkpoint hash mismatch (file corrupt or truncated)");
  }

  Reader r(bytes.data() + 6, body - 6);
  CsrnetConfig& cfg = d.config;
  cfg.scale = r.get<std::uint8_t>();
  cfg.features = r.get<std::uint16_t>();
  cfg.n_pairs = r.get<std::uint16_t>();
  cfg.tap_src = r.get<std::uint16_t>();
  cfg.tap_dst = r.get<std::uint16_t>();
  const auto variant = r.get<std::uint8_t>();
  if (variant > static_cast<std::uint8_t>(Variant::plain_convs)) {
    throw IntegrityError("checkpoint has unknown variant tag " + std::to_string(variant));
  }
  cfg.variant = static_cast<Variant>(variant);
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t e = 0; e < count; ++e) {
    RawEntry entry;
    entry.name = r.str(r.get<std::uint16_t>());
    if (r.get<std::uint8_t>() != kDtypeF32) throw IntegrityError("unsupported dtype tag");
    const auto rank = r.get<std::uint8_t>();
    std::vector<std::size_t> dims;
    std::size_t numel = 1;
    for (std::uint8_t i = 0; i < rank; ++i) {
      dims.push_back(r.get<std::uint32_t>());
      numel *= dims.back();
    }
    entry.shape = make_shape(dims);
    if (numel > r.remaining() / 4) throw IntegrityError("checkpoint payload truncated");
    if (with_payload) {
      entry.data.resize(numel);
      for (float& v : entry.data) v = r.f32();
    } else {
      r.str(numel * 4);
    }
    d.entries.push_back(std::move(entry));
  }
  if (r.remaining() != 0) throw IntegrityError("trailing bytes after checkpoint entries");
  return d;
}

void fill_graph(LayerGraph<float>& g, std::vector<RawEntry>& entries) {
  if (entries.size() != g.params().size()) {
    throw SchemaError("checkpoint has " + std::to_string(entries.size()) +
                      " tensors, model expects " + std::to_string(g.params().size()));
  }
  std::unordered_map<std::string, RawEntry*> by_name;
  for (RawEntry& e : entries) {
    if (!by_name.emplace(e.name, &e).second) {
      throw SchemaError("duplicate tensor '" + e.name + "' in checkpoint");
    }
  }
  for (const Parameter<float>& p : g.params()) {
    auto it = by_name.find(p.name);
    if (it == by_name.end()) throw SchemaError("checkpoint lacks parameter '" + p.name + "'");
    if (it->second->shape != p.value.shape()) {
      throw SchemaError("parameter '" + p.name + "' has shape " + it->second->shape.str() +
                        " in checkpoint, model expects " + p.value.shape().str());
    }
  }
  // Only mutate once every entry has been validated.
  for (Parameter<float>& p : g.params()) {
    RawEntry& e = *by_name.at(p.name);
    p.value = Tensor(e.shape, std::move(e.data));
    p.grad = Tensor(e.shape);
  }
  g.clear_cache();
}

}  // namespace

std::uint64_t fnv1a64(const unsigned char* data, std::size_t len) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<unsigned char> encode_checkpoint(const LayerGraph<float>& g, const CsrnetConfig& cfg) {
  cfg.validate();
  Writer w;
  w.bytes(kMagic, 4);
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint8_t>(narrow<std::uint8_t>(cfg.scale, "scale"));
  w.put<std::uint16_t>(narrow<std::uint16_t>(cfg.features, "features"));
  w.put<std::uint16_t>(narrow<std::uint16_t>(cfg.n_pairs, "n_pairs"));
  w.put<std::uint16_t>(narrow<std::uint16_t>(cfg.tap_src, "tap_src"));
  w.put<std::uint16_t>(narrow<std::uint16_t>(cfg.tap_dst, "tap_dst"));
  w.put<std::uint8_t>(static_cast<std::uint8_t>(cfg.variant));
  w.put<std::uint32_t>(narrow<std::uint32_t>(g.params().size(), "entry count"));
  for (const Parameter<float>& p : g.params()) {
    w.put<std::uint16_t>(narrow<std::uint16_t>(p.name.size(), "name length"));
    w.bytes(p.name.data(), p.name.size());
    w.put<std::uint8_t>(kDtypeF32);
    const Shape& s = p.value.shape();
    w.put<std::uint8_t>(static_cast<std::uint8_t>(s.rank()));
    for (std::size_t i = 0; i < s.rank(); ++i) w.put<std::uint32_t>(narrow<std::uint32_t>(s[i], "extent"));
    for (float v : p.value.data()) w.f32(v);
  }
  auto& buf = w.buffer();
  const std::uint64_t hash = fnv1a64(buf.data(), buf.size());
  w.put<std::uint64_t>(hash);
  return std::move(buf);
}

void save_checkpoint(const LayerGraph<float>& g, const CsrnetConfig& cfg,
                     const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = encode_checkpoint(g, cfg);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to checkpoint " + path.string());
}

LoadedModel load_checkpoint(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_scale) {
  Decoded d = decode(read_file(path), true);
  try {
    d.config.validate();
  } catch (const ConfigError& e) {
    throw IntegrityError(std::string("checkpoint config invalid: ") + e.what());
  }
  if (expected_scale && *expected_scale != d.config.scale) {
    throw SchemaError("checkpoint is for scale x" + std::to_string(d.config.scale) +
                      ", requested x" + std::to_string(*expected_scale));
  }
  LoadedModel m{d.config, build_csrnet<float>(d.config)};
  fill_graph(m.graph, d.entries);
  return m;
}

CsrnetConfig load_checkpoint_into(LayerGraph<float>& g, const std::filesystem::path& path) {
  Decoded d = decode(read_file(path), true);
  fill_graph(g, d.entries);
  return d.config;
}

CheckpointInfo inspect_checkpoint(const std::filesystem::path& path) {
  Decoded d = decode(read_file(path), false);
  CheckpointInfo info;
  info.version = d.version;
  info.config = d.config;
  for (const RawEntry& e : d.entries) {
    info.entries.push_back({e.name, e.shape});
    info.total_params += e.shape.numel();
  }
  return info;
}

}  // namespace csrnet
