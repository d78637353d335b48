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

#include "speechlm/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace speechlm {

using json = nlohmann::json;

constexpr char Checkpoint::kMagic[9];

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const Entry& e : tensors)
    if (e.name == name) return e.tensor;
  fail("checkpoint: no tensor named '" + name + "'");
}

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const Entry& e : tensors)
    if (e.name == name) return true;
  return false;
}

void Checkpoint::save(const std::string& path) const {
  json dir = json::array();
  uint64_t offset = 0;
  for (const Entry& e : tensors) {
    json t;
    t["name"] = e.name;
    t["shape"] = e.tensor.shape();
    t["dtype"] = "f64";
    t["offset"] = offset;
    offset += static_cast<uint64_t>(e.tensor.size()) * sizeof(double);
    dir.push_back(t);
  }
  json header;
  header["version"] = kVersion;
  header["config"] = config;
  header["vocab"] = vocab_tokens;
  header["vocab_hash"] = vocab_hash;
  header["step"] = step;
  header["frozen_groups"] = frozen_groups;
  header["tensors"] = dir;
  header["data_bytes"] = offset;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary);
  check(out.good(), "checkpoint: cannot write " + path);
  out.write(kMagic, 8);
  const uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const Entry& e : tensors)
    out.write(reinterpret_cast<const char*>(e.tensor.data()),
              static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
  check(out.good(), "checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "checkpoint: cannot read " + path);
  char magic[8];
  in.read(magic, 8);
  check(in.good() && std::memcmp(magic, kMagic, 8) == 0,
        "checkpoint: bad magic in " + path + " (expected " + kMagic + ")");
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  check(in.good(), "checkpoint: truncated header length in " + path);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  check(in.good(), "checkpoint: truncated header in " + path);

  json header = json::parse(header_text, nullptr, false);
  check(!header.is_discarded(), "checkpoint: unparseable header in " + path);
  check(header.contains("version"), "checkpoint: missing version field in " + path);
  const int version = header.at("version").get<int>();
  check(version == kVersion, "checkpoint: unsupported version " +
                                 std::to_string(version) + " in " + path);

  Checkpoint ckpt;
  ckpt.config = header.at("config");
  ckpt.vocab_tokens = header.at("vocab").get<std::vector<std::string>>();
  ckpt.vocab_hash = header.at("vocab_hash").get<std::string>();
  ckpt.step = header.at("step").get<uint64_t>();
  ckpt.frozen_groups = header.at("frozen_groups").get<std::vector<std::string>>();

  const uint64_t data_bytes = header.at("data_bytes").get<uint64_t>();
  std::string data(data_bytes, '\0');
  in.read(data.data(), static_cast<std::streamsize>(data_bytes));
  check(in.good(), "checkpoint: truncated tensor data in " + path +
                       " (version " + std::to_string(version) + ", vocab hash " +
                       ckpt.vocab_hash + ")");

  for (const json& t : header.at("tensors")) {
    Entry e;
    e.name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<std::vector<int64_t>>();
    check(t.at("dtype").get<std::string>() == "f64",
          "checkpoint: unsupported dtype for tensor " + e.name);
    const uint64_t offset = t.at("offset").get<uint64_t>();
    int64_t count = 1;
    for (int64_t d : shape) count *= d;
    check(offset + count * sizeof(double) <= data_bytes,
          "checkpoint: tensor " + e.name + " overruns data section");
    std::vector<double> values(static_cast<size_t>(count));
    std::memcpy(values.data(), data.data() + offset,
                static_cast<size_t>(count) * sizeof(double));
    e.tensor = Tensor(shape, std::move(values));
    ckpt.tensors.push_back(std::move(e));
  }
  return ckpt;
}

}  // namespace speechlm
