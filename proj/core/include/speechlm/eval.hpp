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
// Punctuation/case-sensitive token error rate and the four-way error
// breakdown (punctuation, capitalization, ITN, lexical).

#ifndef SPEECHLM_EVAL_HPP_
#define SPEECHLM_EVAL_HPP_

#include <map>
#include <string>
#include <vector>

#include "speechlm/textnorm.hpp"

namespace speechlm {

enum class OpKind { kMatch, kSubstitute, kInsert, kDelete };

struct AlignmentOp {
  OpKind kind;
  std::string ref_token;  // empty for insert
  std::string hyp_token;  // empty for delete
};

struct ErrorBreakdown {
  int64_t punctuation = 0;
  int64_t capitalization = 0;
  int64_t itn = 0;
  int64_t lexical = 0;

  int64_t total() const { return punctuation + capitalization + itn + lexical; }
  ErrorBreakdown& operator+=(const ErrorBreakdown& other);
};

// Whitespace tokens, no folding or stripping.
std::vector<std::string> ter_tokenize(const std::string& text);

// Levenshtein with unit costs; backtrace prefers match > substitute >
// delete > insert so alignments are reproducible.
std::vector<AlignmentOp> align(const std::vector<std::string>& ref_tokens,
                               const std::vector<std::string>& hyp_tokens);

int64_t alignment_errors(const std::vector<AlignmentOp>& ops);

// (sub + del + ins) / |ref tokens|; errors on an empty reference.
double ter(const std::string& ref_text, const std::string& hyp_text);

// True when both spans verbalize (digit expansion, %->percent, casefold,
// punctuation stripped) to the same word sequence.
bool itn_equivalent(const std::vector<std::string>& ref_span,
                    const std::vector<std::string>& hyp_span);

ErrorBreakdown categorize(const std::vector<AlignmentOp>& ops);

// ---- corpus-level evaluation ----------------------------------------------

struct UtteranceScore {
  std::string id;
  std::string dataset;  // empty when the files carry no dataset column
  int64_t ref_tokens = 0;
  int64_t errors = 0;
  ErrorBreakdown breakdown;

  double ter() const {
    return ref_tokens > 0 ? static_cast<double>(errors) / ref_tokens : 0.0;
  }
};

struct CorpusScore {
  std::vector<UtteranceScore> utterances;
  int64_t total_ref_tokens = 0;
  int64_t total_errors = 0;
  ErrorBreakdown breakdown;
  // Per-dataset micro TERs, present when a dataset column exists.
  std::map<std::string, double> dataset_ter;

  double micro_ter() const {
    return total_ref_tokens > 0
               ? static_cast<double>(total_errors) / total_ref_tokens
               : 0.0;
  }
  // Mean of per-dataset TERs (the Table-1 style "average over datasets").
  double macro_ter() const;
  bool has_datasets() const { return !dataset_ter.empty(); }
};

// Transcript files: "id<TAB>text" or "id<TAB>dataset<TAB>text", one
// utterance per line, line-aligned between ref and hyp.
struct TranscriptLine {
  std::string id;
  std::string dataset;
  std::string text;
};
std::vector<TranscriptLine> read_transcript_file(const std::string& path);
void write_transcript_file(const std::string& path,
                           const std::vector<TranscriptLine>& lines);

CorpusScore evaluate_corpus(const std::string& ref_path, const std::string& hyp_path);

// Human-readable report; verbose adds one row per utterance.
std::string format_report(const CorpusScore& score, bool verbose);
// Machine-readable tab-separated variant.
std::string format_report_tsv(const CorpusScore& score, bool verbose);

}  // namespace speechlm

#endif  // SPEECHLM_EVAL_HPP_
