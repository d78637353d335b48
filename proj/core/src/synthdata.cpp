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

#include "speechlm/synthdata.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace speechlm {

namespace {

using json = nlohmann::json;

bool coin(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& list) {
  check(!list.empty(), "gen_formatted_text: empty word list");
  return list[std::uniform_int_distribution<size_t>(0, list.size() - 1)(rng)];
}

std::string capitalize(std::string word) {
  if (!word.empty())
    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  return word;
}

// Core clause without terminal punctuation, e.g. "the lamp gained 40%".
std::string clause(Rng& rng, const GrammarConfig& g) {
  if (coin(rng, g.numeral_probability)) {
    const int n = std::uniform_int_distribution<int>(0, 99)(rng);
    const std::string noun = pick(rng, g.nouns);
    if (coin(rng, g.percent_probability))
      return "the " + noun + " gained " + std::to_string(n) + "%";
    return "the " + noun + " costs " + std::to_string(n) + " dollars";
  }
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:
      return "the " + pick(rng, g.nouns) + " is " + pick(rng, g.adjectives);
    case 1:
      return "the " + pick(rng, g.nouns) + " " + pick(rng, g.verbs) + " the " +
             pick(rng, g.nouns);
    default:
      return "the " + pick(rng, g.nouns) + " belongs to " +
             capitalize(pick(rng, g.names));
  }
}

}  // namespace

std::string gen_formatted_text(Rng& rng, const GrammarConfig& g) {
  if (coin(rng, g.question_probability)) {
    // "Why does Alice want the mirror?"
    return capitalize(pick(rng, g.question_words)) + " does " +
           capitalize(pick(rng, g.names)) + " " + pick(rng, g.verb_bases) +
           " the " + pick(rng, g.nouns) + "?";
  }
  if (coin(rng, g.exclaim_probability)) {
    return capitalize(pick(rng, g.exclaim_words)) + " the " + pick(rng, g.nouns) +
           " is " + pick(rng, g.adjectives) + "!";
  }
  if (coin(rng, g.quote_probability)) {
    // Quoted span always follows "said" and runs to the end of the sentence.
    return capitalize(pick(rng, g.names)) + " said \"" + clause(rng, g) + "\".";
  }
  std::string sentence;
  if (coin(rng, g.comma_probability))
    sentence = capitalize(pick(rng, g.lead_words)) + ", " + clause(rng, g);
  else
    sentence = capitalize(clause(rng, g));
  return sentence + ".";
}

Tensor render_frames(const std::string& spoken, int input_dim, double sigma,
                     uint64_t proto_seed, Rng& rng) {
  check(!spoken.empty(), "render_frames: empty token sequence");
  check(input_dim >= 1, "render_frames: input_dim must be positive");

  auto prototype = [&](uint64_t stream) {
    Rng proto_rng(mix_seed(proto_seed, stream));
    std::normal_distribution<double> unit(0.0, 1.0);
    std::vector<double> proto(static_cast<size_t>(input_dim));
    for (double& v : proto) v = unit(proto_rng);
    return proto;
  };

  std::vector<double> data;
  std::normal_distribution<double> noise(0.0, sigma);
  int64_t frames = 0;
  bool any_speech = false;
  for (char c : spoken) {
    const bool silence = (c == ' ');
    const int dur = silence ? std::uniform_int_distribution<int>(0, 4)(rng)
                            : std::uniform_int_distribution<int>(4, 12)(rng);
    if (!silence) any_speech = true;
    if (dur == 0) continue;
    const std::vector<double> proto =
        prototype(silence ? 256u : static_cast<unsigned char>(c));
    for (int f = 0; f < dur; ++f) {
      for (int d = 0; d < input_dim; ++d)
        data.push_back(proto[static_cast<size_t>(d)] +
                       (sigma > 0.0 ? noise(rng) : 0.0));
      ++frames;
    }
  }
  check(any_speech, "render_frames: token sequence has no speech characters");
  return Tensor({frames, input_dim}, std::move(data));
}

Utterance make_utterance(const std::string& id, uint64_t utt_seed,
                         const SynthConfig& cfg, double sigma) {
  Rng rng(utt_seed);
  Utterance utt;
  utt.id = id;
  utt.written = gen_formatted_text(rng, cfg.grammar);
  utt.spoken = spoken_form(utt.written);
  utt.frames = render_frames(utt.spoken, cfg.input_dim, sigma, cfg.proto_seed, rng);
  return utt;
}

void write_frames_file(const std::string& path, const Tensor& frames) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "frames: cannot write " + path);
  const int32_t rows = static_cast<int32_t>(frames.rows());
  const int32_t cols = static_cast<int32_t>(frames.cols());
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  for (int64_t i = 0; i < frames.size(); ++i) {
    const float v = static_cast<float>(frames.at(i));
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  check(out.good(), "frames: write failed for " + path);
}

Tensor read_frames_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "frames: cannot read " + path);
  int32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  check(in.good() && rows >= 1 && cols >= 1, "frames: bad header in " + path);
  std::vector<double> data;
  data.reserve(static_cast<size_t>(rows) * static_cast<size_t>(cols));
  for (int64_t i = 0; i < static_cast<int64_t>(rows) * cols; ++i) {
    float v = 0.0f;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    data.push_back(static_cast<double>(v));
  }
  check(in.good(), "frames: truncated data in " + path);
  return Tensor({rows, cols}, std::move(data));
}

void write_split_jsonl(const std::string& path,
                       const std::vector<CorpusRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "corpus: cannot write " + path);
  for (const CorpusRecord& r : records) {
    json j;
    j["id"] = r.id;
    j["written"] = r.written;
    j["spoken"] = r.spoken;
    j["frames_path"] = r.frames_path;
    out << j.dump() << '\n';
  }
  check(out.good(), "corpus: write failed for " + path);
}

std::vector<CorpusRecord> read_split_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "corpus: cannot read " + path);
  std::vector<CorpusRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    check(!j.is_discarded(), "corpus: bad JSON line in " + path);
    CorpusRecord r;
    r.id = j.at("id").get<std::string>();
    r.written = j.at("written").get<std::string>();
    r.spoken = j.at("spoken").get<std::string>();
    r.frames_path = j.at("frames_path").get<std::string>();
    records.push_back(std::move(r));
  }
  return records;
}

Tensor load_record_frames(const std::string& corpus_dir, const CorpusRecord& record) {
  return read_frames_file(corpus_dir + "/" + record.frames_path);
}

}  // namespace speechlm
