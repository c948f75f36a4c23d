// Copyright 2026 The qkd Authors
// SPDX-License-Identifier: Apache-2.0

#include "qkd/models/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "qkd/core/error.hpp"
#include "qkd/core/hash.hpp"

namespace qkd {

nlohmann::json CheckpointMeta::to_json() const {
  return {{"seed", seed},
          {"epochs", epochs},
          {"train_accuracy", train_accuracy},
          {"test_accuracy", test_accuracy},
          {"extra", extra}};
}

CheckpointMeta CheckpointMeta::from_json(const nlohmann::json& j) {
  CheckpointMeta m;
  m.seed = j.value("seed", std::uint64_t{0});
  m.epochs = j.value("epochs", 0);
  m.train_accuracy = j.value("train_accuracy", 0.0);
  m.test_accuracy = j.value("test_accuracy", 0.0);
  m.extra = j.value("extra", nlohmann::json::object());
  return m;
}

std::size_t Checkpoint::trainable_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) {
    if (is_trainable(t.kind)) n += t.values.size();
  }
  return n;
}

template <typename T>
Checkpoint make_checkpoint(const Model<T>& model, CheckpointMeta meta) {
  Checkpoint c;
  c.spec = model.spec();
  c.meta = std::move(meta);
  for (const auto& p : model.parameters()) {
    c.tensors.push_back(CheckpointTensor{p.name, p.kind, p.value.shape(),
                                         std::vector<float>(p.value.data().begin(), p.value.data().end())});
  }
  return c;
}

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes_.insert(bytes_.end(), b, b + n);
  }
  void str32(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  void need(std::size_t n) const {
    if (n > size_ - pos_) {
      throw IntegrityError("checkpoint: truncated at byte " + std::to_string(pos_));
    }
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large files.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& c) {
  Writer w;
  w.raw(Checkpoint::kMagic, sizeof(Checkpoint::kMagic));
  w.u32(Checkpoint::kVersion);
  w.u64(c.spec_hash());
  w.str32(c.spec.canonical());
  w.str32(c.meta.to_json().dump());
  w.u32(static_cast<std::uint32_t>(c.tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : c.tensors) {
    if (shape_numel(t.shape) != t.values.size()) {
      throw DimensionError("checkpoint: tensor '" + t.name + "' shape/value mismatch");
    }
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.raw(t.name.data(), t.name.size());
    w.u8(static_cast<std::uint8_t>(t.kind));
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    w.u64(offset);
    w.u64(t.values.size());
    offset += t.values.size();
  }
  for (const auto& t : c.tensors) {
    for (float v : t.values) w.f32(v);
  }
  auto& bytes = w.bytes();
  w.u32(crc_of(bytes.data(), bytes.size()));
  return std::move(bytes);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  constexpr std::size_t kMinSize = sizeof(Checkpoint::kMagic) + 4 + 8 + 4 + 4 + 4 + 4;
  if (bytes.size() < kMinSize) {
    throw IntegrityError("checkpoint: file too short (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (std::memcmp(bytes.data(), Checkpoint::kMagic, sizeof(Checkpoint::kMagic)) != 0) {
    throw IntegrityError("checkpoint: bad magic");
  }
  const std::size_t body = bytes.size() - 4;
  Reader tail(bytes.data() + body, 4);
  if (tail.u32() != crc_of(bytes.data(), body)) {
    throw IntegrityError("checkpoint: checksum mismatch (corrupt or truncated file)");
  }
  Reader r(bytes.data(), body);
  r.str(sizeof(Checkpoint::kMagic));
  const std::uint32_t version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw IntegrityError("checkpoint: unsupported version " + std::to_string(version));
  }
  const std::uint64_t hash = r.u64();
  Checkpoint c;
  try {
    const std::string spec_json = r.str(r.u32());
    c.spec = ModelSpec::from_json(nlohmann::json::parse(spec_json));
    c.meta = CheckpointMeta::from_json(nlohmann::json::parse(r.str(r.u32())));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("checkpoint: malformed header JSON: ") + e.what());
  }
  if (c.spec.hash() != hash) throw IntegrityError("checkpoint: spec hash does not match spec text");
  const std::uint32_t count = r.u32();
  struct Entry {
    std::uint64_t offset, count;
  };
  std::vector<Entry> entries;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.str(r.u16());
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ParamKind::kRunningVar)) {
      throw IntegrityError("checkpoint: unknown tensor kind " + std::to_string(kind));
    }
    t.kind = static_cast<ParamKind>(kind);
    const std::uint8_t rank = r.u8();
    for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(r.u32());
    Entry e{r.u64(), r.u64()};
    if (e.count != shape_numel(t.shape)) {
      throw IntegrityError("checkpoint: tensor '" + t.name + "' count does not match its shape");
    }
    entries.push_back(e);
    c.tensors.push_back(std::move(t));
  }
  const std::size_t payload = r.pos();
  const std::size_t available = (body - payload) / 4;
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    const Entry& e = entries[i];
    if (e.offset > available || e.count > available - e.offset) {
      throw IntegrityError("checkpoint: tensor '" + c.tensors[i].name + "' payload out of range");
    }
    auto& values = c.tensors[i].values;
    values.resize(e.count);
    Reader p(bytes.data() + payload + 4 * e.offset, 4 * e.count);
    for (auto& v : values) v = std::bit_cast<float>(p.u32());
  }
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(checkpoint);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("checkpoint: cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("checkpoint: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("checkpoint: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

template <typename T>
Model<T> model_from_checkpoint(const Checkpoint& checkpoint) {
  Model<T> m = Model<T>::build(checkpoint.spec, 0);
  m.load_state(checkpoint);
  return m;
}

template Checkpoint make_checkpoint<float>(const Model<float>&, CheckpointMeta);
template Checkpoint make_checkpoint<double>(const Model<double>&, CheckpointMeta);
template Model<float> model_from_checkpoint<float>(const Checkpoint&);
template Model<double> model_from_checkpoint<double>(const Checkpoint&);

}  // namespace qkd
