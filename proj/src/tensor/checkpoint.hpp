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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tensor/optim.hpp"
#include "tensor/tensor.hpp"

namespace sae::ad {

// Versioned named-array container.
//
// Layout (all integers little-endian):
//   bytes[8]  magic "SAECKPT1"
//   u32       format version (1)
//   u32       metadata count, then per item: u32 len + key bytes, u32 len + value bytes
//   u32       entry count, then per entry:
//               u32 len + name bytes, u32 rank, u64 extent[rank],
//               f64 data[product(extent)] (IEEE-754 binary64, little-endian)
// Metadata items are written sorted by key; entries in insertion order.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, Tensor>> entries;

  void put(const std::string& name, Tensor t);
  const Tensor* find(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  const std::string& meta_at(const std::string& key) const;

  std::vector<unsigned char> serialize() const;
  static Checkpoint deserialize(const std::vector<unsigned char>& bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

// Copies every parameter and buffer of `store` into `ckpt` under its name.
void export_parameters(const ParameterStore& store, Checkpoint& ckpt);
// Overwrites every parameter of `store` from `ckpt`; missing or mis-shaped
// entries raise a config error.
void import_parameters(ParameterStore& store, const Checkpoint& ckpt);

void export_optimizer(const AdamW& optim, Checkpoint& ckpt);
void import_optimizer(AdamW& optim, const Checkpoint& ckpt);

}  // namespace sae::ad
