// Copyright 2026 The speechlm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEECHLM_CHECKPOINT_HPP_
#define SPEECHLM_CHECKPOINT_HPP_

#include <string>
#include <vector>

#include "json.hpp"
#include "speechlm/tensor.hpp"

namespace speechlm {

// Container file: 8-byte magic, little-endian u64 header length, JSON header
// (version, config, vocabulary snapshot, step, frozen groups, named-tensor
// directory with offsets/shapes/dtype), then raw little-endian f64 data.
// Loading and re-saving is byte-identical.
struct Checkpoint {
  static constexpr int kVersion = 1;
  static constexpr char kMagic[9] = "SLMCKPT1";

  nlohmann::json config;
  std::vector<std::string> vocab_tokens;
  std::string vocab_hash;
  uint64_t step = 0;
  std::vector<std::string> frozen_groups;  // parameter-name prefixes

  struct Entry {
    std::string name;
    Tensor tensor;
  };
  std::vector<Entry> tensors;

  const Tensor& tensor(const std::string& name) const;
  bool has_tensor(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace speechlm

#endif  // SPEECHLM_CHECKPOINT_HPP_
