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

#include "speechlm/tokenizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace speechlm {

namespace {

const char* const kReservedStrings[kNumReserved] = {"<blank>", "<pad>", "<bos>",
                                                    "<eos>",   "<mask>", "<unk>"};

}  // namespace

Vocabulary Vocabulary::build(const std::string& corpus, VocabMode mode) {
  check(!corpus.empty(), "build_vocab: empty corpus");
  Vocabulary vocab;
  for (int i = 0; i < kNumReserved; ++i)
    vocab.id_to_string_.push_back(kReservedStrings[i]);

  std::set<char> chars(corpus.begin(), corpus.end());
  for (char c : chars) vocab.id_to_string_.push_back(std::string(1, c));

  if (mode == VocabMode::kCharMerged) {
    std::map<std::string, int64_t> bigram_counts;
    for (size_t i = 0; i + 1 < corpus.size(); ++i)
      ++bigram_counts[corpus.substr(i, 2)];
    std::vector<std::pair<std::string, int64_t>> ranked(bigram_counts.begin(),
                                                        bigram_counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    const size_t take = std::min<size_t>(kMergedBigrams, ranked.size());
    for (size_t i = 0; i < take; ++i) vocab.id_to_string_.push_back(ranked[i].first);
  }

  vocab.index_tokens();
  return vocab;
}

void Vocabulary::index_tokens() {
  char_id_.assign(256, -1);
  bigram_id_.clear();
  for (int id = kNumReserved; id < size(); ++id) {
    const std::string& tok = id_to_string_[static_cast<size_t>(id)];
    if (tok.size() == 1) {
      char_id_[static_cast<unsigned char>(tok[0])] = id;
    } else {
      bigram_id_.emplace_back(tok, id);
    }
  }
  std::sort(bigram_id_.begin(), bigram_id_.end());
  for (size_t i = 1; i < bigram_id_.size(); ++i)
    check(bigram_id_[i].first != bigram_id_[i - 1].first,
          "vocabulary: duplicate token " + bigram_id_[i].first);
}

TokenSequence Vocabulary::encode(const std::string& text) const {
  TokenSequence out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    if (i + 1 < text.size() && !bigram_id_.empty()) {
      const std::string pair = text.substr(i, 2);
      auto it = std::lower_bound(bigram_id_.begin(), bigram_id_.end(),
                                 std::make_pair(pair, 0));
      if (it != bigram_id_.end() && it->first == pair) {
        out.push_back(it->second);
        i += 2;
        continue;
      }
    }
    const int id = char_id_[static_cast<unsigned char>(text[i])];
    out.push_back(id >= 0 ? id : kUnkId);
    ++i;
  }
  return out;
}

std::string Vocabulary::decode(const TokenSequence& tokens) const {
  std::string out;
  for (int id : tokens) {
    check(id >= 0 && id < size(),
          "decode: token id " + std::to_string(id) + " out of range [0," +
              std::to_string(size()) + ")");
    if (id < kNumReserved) continue;
    out += id_to_string_[static_cast<size_t>(id)];
  }
  return out;
}

const std::string& Vocabulary::token(int id) const {
  check(id >= 0 && id < size(), "vocabulary: id out of range");
  return id_to_string_[static_cast<size_t>(id)];
}

int Vocabulary::id_of(const std::string& token) const {
  if (token.size() == 1) {
    return char_id_[static_cast<unsigned char>(token[0])];
  }
  auto it = std::lower_bound(bigram_id_.begin(), bigram_id_.end(),
                             std::make_pair(token, 0));
  if (it != bigram_id_.end() && it->first == token) return it->second;
  for (int i = 0; i < kNumReserved; ++i)
    if (token == kReservedStrings[i]) return i;
  return -1;
}

std::string escape_token(const std::string& token) {
  std::string out;
  for (char c : token) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case ' ': out += "\\s"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_token(const std::string& line) {
  std::string out;
  for (size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '\\') {
      out += line[i];
      continue;
    }
    check(i + 1 < line.size(), "vocabulary: dangling escape in '" + line + "'");
    switch (line[++i]) {
      case '\\': out += '\\'; break;
      case 's': out += ' '; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: fail("vocabulary: unknown escape in '" + line + "'");
    }
  }
  return out;
}

std::string Vocabulary::serialize() const {
  std::string out;
  for (const std::string& tok : id_to_string_) {
    out += escape_token(tok);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) tokens.push_back(unescape_token(line));
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary vocab;
  vocab.id_to_string_ = std::move(tokens);
  check(vocab.size() >= kNumReserved, "vocabulary: fewer tokens than reserved slots");
  for (int i = 0; i < kNumReserved; ++i)
    check(vocab.id_to_string_[static_cast<size_t>(i)] == kReservedStrings[i],
          "vocabulary: reserved token mismatch at index " + std::to_string(i));
  vocab.index_tokens();
  return vocab;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "vocabulary: cannot write " + path);
  out << serialize();
  check(out.good(), "vocabulary: write failed for " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "vocabulary: cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

std::string Vocabulary::hash() const {
  const std::string text = serialize();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace speechlm
