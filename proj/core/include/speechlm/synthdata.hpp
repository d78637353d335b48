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
//
// Synthetic fully-formatted sentences, their spoken forms, and synthetic
// acoustic frames.  Formatting (capitalization, punctuation, numerals) is a
// deterministic function of the spoken word sequence, so a model can learn
// to restore it from acoustic evidence alone.

#ifndef SPEECHLM_SYNTHDATA_HPP_
#define SPEECHLM_SYNTHDATA_HPP_

#include <string>
#include <vector>

#include "speechlm/common.hpp"
#include "speechlm/tensor.hpp"
#include "speechlm/textnorm.hpp"

namespace speechlm {

struct GrammarConfig {
  double question_probability = 0.20;
  double exclaim_probability = 0.05;
  double quote_probability = 0.15;
  double numeral_probability = 0.25;
  double comma_probability = 0.20;
  double percent_probability = 0.50;  // numeral rendered as N% vs N dollars

  std::vector<std::string> nouns = {
      "apple",  "book",   "cloud",  "door",   "engine", "flower", "garden",
      "house",  "island", "kettle", "lamp",   "mirror", "needle", "ocean",
      "pencil", "river",  "stone",  "table",  "window", "basket"};
  std::vector<std::string> verbs = {"sees",  "likes", "finds", "holds",
                                    "wants", "makes", "takes", "gives"};
  std::vector<std::string> verb_bases = {"see",  "like", "find", "hold",
                                         "want", "make", "take", "give"};
  std::vector<std::string> adjectives = {"big",  "small", "red",  "blue",
                                         "old",  "new",   "warm", "cold"};
  std::vector<std::string> names = {"alice", "bob",   "carol", "david",
                                    "emma",  "frank", "grace", "henry"};
  std::vector<std::string> question_words = {"why", "how", "when", "where"};
  std::vector<std::string> exclaim_words = {"wow", "indeed", "truly"};
  std::vector<std::string> lead_words = {"however", "meanwhile", "moreover",
                                         "still"};
};

struct Utterance {
  std::string id;
  std::string written;
  std::string spoken;
  Tensor frames;  // [T, input_dim]
};

// One fully-formatted sentence.  Leading capital; '?' on question-word
// sentences, '!' on exclamation-word sentences, '.' otherwise; comma after a
// leading adverb; quoted span after "said"; numerals rendered as digits
// (optionally with '%'); proper names capitalized wherever they appear.
std::string gen_formatted_text(Rng& rng, const GrammarConfig& grammar);

// Frames for the spoken character sequence: every non-space character is a
// fixed per-character prototype emitted for 4-12 frames plus Gaussian noise;
// spaces become a silence prototype held for 0-4 frames.
Tensor render_frames(const std::string& spoken, int input_dim, double sigma,
                     uint64_t proto_seed, Rng& rng);

struct SynthConfig {
  int input_dim = 16;
  double noise_sigma = 0.3;       // *_clean condition
  double noise_sigma_hard = 0.8;  // *_other condition
  uint64_t proto_seed = 17;
  GrammarConfig grammar;
};

Utterance make_utterance(const std::string& id, uint64_t utt_seed,
                         const SynthConfig& cfg, double sigma);

// ---- corpus files ---------------------------------------------------------
//
// A corpus directory holds one JSON-lines file per split with records
// {id, written, spoken, frames_path}, frames as little-endian binaries
// (int32 rows, int32 cols header, float32 data), a vocab file, reference
// transcripts, and a text-only corpus for LM pretraining.

struct CorpusRecord {
  std::string id;
  std::string written;
  std::string spoken;
  std::string frames_path;  // relative to the corpus directory
};

void write_frames_file(const std::string& path, const Tensor& frames);
Tensor read_frames_file(const std::string& path);

void write_split_jsonl(const std::string& path, const std::vector<CorpusRecord>& records);
std::vector<CorpusRecord> read_split_jsonl(const std::string& path);

Tensor load_record_frames(const std::string& corpus_dir, const CorpusRecord& record);

}  // namespace speechlm

#endif  // SPEECHLM_SYNTHDATA_HPP_
