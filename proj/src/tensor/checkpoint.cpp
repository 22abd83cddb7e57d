/*
 * Copyright 2026 The sae-strokes Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "common/error.hpp"

namespace sae::ad {

namespace {

constexpr char kMagic[8] = {'S', 'A', 'E', 'C', 'K', 'P', 'T', '1'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  std::vector<unsigned char> take() { return std::move(out_); }

 private:
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& in) : in_(in) {}

  void need(std::size_t n) const {
    require(pos_ + n <= in_.size(), ErrorKind::Io,
            "checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void expect_magic() {
    need(sizeof(kMagic));
    require(std::memcmp(in_.data(), kMagic, sizeof(kMagic)) == 0, ErrorKind::Io,
            "not a checkpoint file (bad magic)");
    pos_ += sizeof(kMagic);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::vector<unsigned char>& in_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::put(const std::string& name, Tensor t) {
  for (auto& [n, v] : entries) {
    if (n == name) {
      v = std::move(t);
      return;
    }
  }
  entries.emplace_back(name, std::move(t));
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, v] : entries) {
    if (n == name) return &v;
  }
  return nullptr;
}

const Tensor& Checkpoint::get(const std::string& name) const {
  const Tensor* t = find(name);
  require(t != nullptr, ErrorKind::Config, "checkpoint has no entry " + name);
  return *t;
}

const std::string& Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  require(it != meta.end(), ErrorKind::Config, "checkpoint metadata lacks key " + key);
  return it->second;
}

std::vector<unsigned char> Checkpoint::serialize() const {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  for (const auto& [k, v] : meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [name, t] : entries) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.u64(d);
    for (double v : t.data()) w.f64(v);
  }
  return w.take();
}

Checkpoint Checkpoint::deserialize(const std::vector<unsigned char>& bytes) {
  Reader r(bytes);
  r.expect_magic();
  const std::uint32_t version = r.u32();
  require(version == kVersion, ErrorKind::Io,
          "unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str();
    c.meta[k] = r.str();
  }
  const std::uint32_t n_entries = r.u32();
  for (std::uint32_t i = 0; i < n_entries; ++i) {
    std::string name = r.str();
    const std::uint32_t rank = r.u32();
    require(rank >= 1 && rank <= 8, ErrorKind::Io, "checkpoint entry " + name + " has bad rank");
    Shape shape(rank);
    std::size_t total = 1;
    for (auto& d : shape) {
      d = r.u64();
      require(d > 0, ErrorKind::Io, "checkpoint entry " + name + " has an empty extent");
      total *= d;
    }
    r.need(total * 8);
    std::vector<double> data(total);
    for (auto& v : data) v = r.f64();
    c.entries.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  require(r.done(), ErrorKind::Io, "trailing bytes after checkpoint entries");
  return c;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(out.good(), ErrorKind::Io, "write failed for " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open checkpoint " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void export_parameters(const ParameterStore& store, Checkpoint& ckpt) {
  store.for_each([&](const Parameter& p) { ckpt.put(p.name, p.value); });
}

void import_parameters(ParameterStore& store, const Checkpoint& ckpt) {
  store.for_each([&](Parameter& p) {
    const Tensor* t = ckpt.find(p.name);
    require(t != nullptr, ErrorKind::Config, "checkpoint lacks parameter " + p.name);
    require(t->shape() == p.value.shape(), ErrorKind::Config,
            "checkpoint parameter " + p.name + " has shape " + shape_str(t->shape()) +
                ", model expects " + shape_str(p.value.shape()));
    p.value = *t;
  });
}

void export_optimizer(const AdamW& optim, Checkpoint& ckpt) {
  ckpt.meta["optim.step"] = std::to_string(optim.steps());
  for (const auto& [name, m] : optim.moments()) {
    ckpt.put("optim.m." + name, m.first);
    ckpt.put("optim.v." + name, m.second);
  }
}

void import_optimizer(AdamW& optim, const Checkpoint& ckpt) {
  auto it = ckpt.meta.find("optim.step");
  if (it == ckpt.meta.end()) return;
  std::map<std::string, Moments> moments;
  for (const auto& [name, t] : ckpt.entries) {
    if (name.rfind("optim.m.", 0) == 0) {
      const std::string key = name.substr(8);
      moments[key].first = t;
      moments[key].second = ckpt.get("optim.v." + key);
    }
  }
  optim.restore(std::stoull(it->second), std::move(moments));
}

}  // namespace sae::ad
