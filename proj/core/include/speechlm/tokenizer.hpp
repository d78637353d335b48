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

#ifndef SPEECHLM_TOKENIZER_HPP_
#define SPEECHLM_TOKENIZER_HPP_

#include <string>
#include <vector>

#include "speechlm/common.hpp"

namespace speechlm {

using TokenSequence = std::vector<int>;

// Reserved ids, fixed at the head of every vocabulary.  Blank is id 0 and is
// owned by CTC; encode() never emits it or any other reserved token.
enum ReservedId : int {
  kBlankId = 0,
  kPadId = 1,
  kBosId = 2,
  kEosId = 3,
  kMaskId = 4,
  kUnkId = 5,
  kNumReserved = 6,
};

enum class VocabMode { kChar, kCharMerged };

// Character-level vocabulary with an optional bigram-merged variant.
// Immutable after construction; encode/decode are pure.
class Vocabulary {
 public:
  // `char` mode: one token per distinct character of the corpus.
  // `char_merged` mode additionally adds the 200 most frequent character
  // bigrams, ties broken lexicographically.
  static Vocabulary build(const std::string& corpus, VocabMode mode);

  TokenSequence encode(const std::string& text) const;  // greedy longest match
  std::string decode(const TokenSequence& tokens) const;

  int size() const { return static_cast<int>(id_to_string_.size()); }
  const std::string& token(int id) const;
  // Returns -1 when the string is not a token.
  int id_of(const std::string& token) const;

  // Line-oriented file: index = line number, reserved tokens on lines 0-5,
  // whitespace and backslash escaped.
  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);
  static Vocabulary from_tokens(std::vector<std::string> tokens);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  // FNV-1a hash of the serialized form, used by checkpoints.
  std::string hash() const;

  const std::vector<std::string>& tokens() const { return id_to_string_; }
  bool operator==(const Vocabulary& other) const {
    return id_to_string_ == other.id_to_string_;
  }

  static constexpr int kMergedBigrams = 200;

 private:
  Vocabulary() = default;
  void index_tokens();

  std::vector<std::string> id_to_string_;
  // Greedy matching tables: longest token is 2 chars, so two flat maps do.
  std::vector<int> char_id_;                       // 256 entries, -1 = absent
  std::vector<std::pair<std::string, int>> bigram_id_;  // sorted for lookup
};

std::string escape_token(const std::string& token);
std::string unescape_token(const std::string& line);

}  // namespace speechlm

#endif  // SPEECHLM_TOKENIZER_HPP_
