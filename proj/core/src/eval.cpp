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

#include "speechlm/eval.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace speechlm {

ErrorBreakdown& ErrorBreakdown::operator+=(const ErrorBreakdown& other) {
  punctuation += other.punctuation;
  capitalization += other.capitalization;
  itn += other.itn;
  lexical += other.lexical;
  return *this;
}

std::vector<std::string> ter_tokenize(const std::string& text) {
  return split_whitespace(text);
}

std::vector<AlignmentOp> align(const std::vector<std::string>& ref,
                               const std::vector<std::string>& hyp) {
  const size_t nr = ref.size(), nh = hyp.size();
  std::vector<int64_t> dist((nr + 1) * (nh + 1));
  auto d = [&](size_t i, size_t j) -> int64_t& { return dist[i * (nh + 1) + j]; };
  for (size_t i = 0; i <= nr; ++i) d(i, 0) = static_cast<int64_t>(i);
  for (size_t j = 0; j <= nh; ++j) d(0, j) = static_cast<int64_t>(j);
  for (size_t i = 1; i <= nr; ++i) {
    for (size_t j = 1; j <= nh; ++j) {
      const int64_t sub = d(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      d(i, j) = std::min({sub, d(i - 1, j) + 1, d(i, j - 1) + 1});
    }
  }

  // Backtrace, fixed preference: match > substitute > delete > insert.
  std::vector<AlignmentOp> ops;
  size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && d(i, j) == d(i - 1, j - 1)) {
      ops.push_back({OpKind::kMatch, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && j > 0 && ref[i - 1] != hyp[j - 1] &&
               d(i, j) == d(i - 1, j - 1) + 1) {
      ops.push_back({OpKind::kSubstitute, ref[i - 1], hyp[j - 1]});
      --i, --j;
    } else if (i > 0 && d(i, j) == d(i - 1, j) + 1) {
      ops.push_back({OpKind::kDelete, ref[i - 1], ""});
      --i;
    } else {
      ops.push_back({OpKind::kInsert, "", hyp[j - 1]});
      --j;
    }
  }
  std::reverse(ops.begin(), ops.end());
  return ops;
}

int64_t alignment_errors(const std::vector<AlignmentOp>& ops) {
  int64_t n = 0;
  for (const AlignmentOp& op : ops)
    if (op.kind != OpKind::kMatch) ++n;
  return n;
}

double ter(const std::string& ref_text, const std::string& hyp_text) {
  const std::vector<std::string> ref = ter_tokenize(ref_text);
  check(!ref.empty(), "ter: empty reference");
  const std::vector<std::string> hyp = ter_tokenize(hyp_text);
  return static_cast<double>(alignment_errors(align(ref, hyp))) /
         static_cast<double>(ref.size());
}

namespace {

std::vector<std::string> verbalize_span(const std::vector<std::string>& span) {
  std::vector<std::string> words;
  for (const std::string& token : span) {
    const std::vector<std::string> w = verbalize_token(token);
    words.insert(words.end(), w.begin(), w.end());
  }
  return words;
}

// Casefolded, punctuation-stripped word sequence without digit expansion.
std::vector<std::string> normalized_span(const std::vector<std::string>& span) {
  std::vector<std::string> words;
  for (const std::string& token : span) {
    const std::string w = casefold_strip(token);
    if (!w.empty()) words.push_back(w);
  }
  return words;
}

bool pure_punct(const std::string& token) {
  if (token.empty()) return false;
  for (char c : token)
    if (!is_punct_char(c)) return false;
  return true;
}

void classify_op(const AlignmentOp& op, ErrorBreakdown* out) {
  if (op.kind == OpKind::kSubstitute) {
    if (strip_punct(op.ref_token) == strip_punct(op.hyp_token)) {
      ++out->punctuation;
    } else if (casefold(op.ref_token) == casefold(op.hyp_token)) {
      ++out->capitalization;
    } else if (casefold_strip(op.ref_token) == casefold_strip(op.hyp_token)) {
      // Differs in both punctuation and casing; punctuation takes precedence.
      ++out->punctuation;
    } else {
      ++out->lexical;
    }
    return;
  }
  const std::string& token =
      op.kind == OpKind::kInsert ? op.hyp_token : op.ref_token;
  if (pure_punct(token))
    ++out->punctuation;
  else
    ++out->lexical;
}

}  // namespace

bool itn_equivalent(const std::vector<std::string>& ref_span,
                    const std::vector<std::string>& hyp_span) {
  check(!ref_span.empty() && !hyp_span.empty(), "itn_equivalent: empty span");
  return verbalize_span(ref_span) == verbalize_span(hyp_span);
}

ErrorBreakdown categorize(const std::vector<AlignmentOp>& ops) {
  ErrorBreakdown out;
  size_t i = 0;
  while (i < ops.size()) {
    if (ops[i].kind == OpKind::kMatch) {
      ++i;
      continue;
    }
    // Maximal run of consecutive non-match ops.
    size_t j = i;
    std::vector<std::string> ref_span, hyp_span;
    while (j < ops.size() && ops[j].kind != OpKind::kMatch) {
      if (!ops[j].ref_token.empty()) ref_span.push_back(ops[j].ref_token);
      if (!ops[j].hyp_token.empty()) hyp_span.push_back(ops[j].hyp_token);
      ++j;
    }
    // A run is an ITN event when both spans verbalize identically but the
    // difference is not merely punctuation/casing (i.e., the number-word
    // expansion did real work).
    const bool itn_run = !ref_span.empty() && !hyp_span.empty() &&
                         itn_equivalent(ref_span, hyp_span) &&
                         normalized_span(ref_span) != normalized_span(hyp_span);
    if (itn_run) {
      out.itn += static_cast<int64_t>(j - i);
    } else {
      for (size_t k = i; k < j; ++k) classify_op(ops[k], &out);
    }
    i = j;
  }
  return out;
}

// ---- corpus evaluation ------------------------------------------------------

std::vector<TranscriptLine> read_transcript_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), "transcripts: cannot read " + path);
  std::vector<TranscriptLine> lines;
  std::string raw;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    TranscriptLine line;
    const size_t tab1 = raw.find('\t');
    check(tab1 != std::string::npos,
          "transcripts: missing tab on line " + std::to_string(lines.size() + 1) +
              " of " + path);
    line.id = raw.substr(0, tab1);
    const size_t tab2 = raw.find('\t', tab1 + 1);
    if (tab2 != std::string::npos) {
      line.dataset = raw.substr(tab1 + 1, tab2 - tab1 - 1);
      line.text = raw.substr(tab2 + 1);
    } else {
      line.text = raw.substr(tab1 + 1);
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_transcript_file(const std::string& path,
                           const std::vector<TranscriptLine>& lines) {
  std::ofstream out(path, std::ios::binary);
  check(out.good(), "transcripts: cannot write " + path);
  for (const TranscriptLine& line : lines) {
    out << line.id << '\t';
    if (!line.dataset.empty()) out << line.dataset << '\t';
    out << line.text << '\n';
  }
  check(out.good(), "transcripts: write failed for " + path);
}

CorpusScore evaluate_corpus(const std::string& ref_path, const std::string& hyp_path) {
  const std::vector<TranscriptLine> refs = read_transcript_file(ref_path);
  const std::vector<TranscriptLine> hyps = read_transcript_file(hyp_path);
  check(refs.size() == hyps.size(),
        "evaluate_corpus: " + std::to_string(refs.size()) + " reference vs " +
            std::to_string(hyps.size()) + " hypothesis lines");

  CorpusScore score;
  std::map<std::string, std::pair<int64_t, int64_t>> by_dataset;  // tokens, errors
  for (size_t i = 0; i < refs.size(); ++i) {
    check(refs[i].id == hyps[i].id,
          "evaluate_corpus: id mismatch on line " + std::to_string(i + 1) + ": '" +
              refs[i].id + "' vs '" + hyps[i].id + "'");
    const std::vector<std::string> ref_tokens = ter_tokenize(refs[i].text);
    check(!ref_tokens.empty(),
          "evaluate_corpus: empty reference for id " + refs[i].id);
    const std::vector<std::string> hyp_tokens = ter_tokenize(hyps[i].text);
    const std::vector<AlignmentOp> ops = align(ref_tokens, hyp_tokens);

    UtteranceScore utt;
    utt.id = refs[i].id;
    utt.dataset = refs[i].dataset;
    utt.ref_tokens = static_cast<int64_t>(ref_tokens.size());
    utt.errors = alignment_errors(ops);
    utt.breakdown = categorize(ops);

    score.total_ref_tokens += utt.ref_tokens;
    score.total_errors += utt.errors;
    score.breakdown += utt.breakdown;
    if (!utt.dataset.empty()) {
      by_dataset[utt.dataset].first += utt.ref_tokens;
      by_dataset[utt.dataset].second += utt.errors;
    }
    score.utterances.push_back(std::move(utt));
  }
  for (const auto& [name, totals] : by_dataset)
    score.dataset_ter[name] =
        static_cast<double>(totals.second) / static_cast<double>(totals.first);
  return score;
}

double CorpusScore::macro_ter() const {
  if (dataset_ter.empty()) return micro_ter();
  double sum = 0.0;
  for (const auto& [name, t] : dataset_ter) sum += t;
  return sum / static_cast<double>(dataset_ter.size());
}

std::string format_report(const CorpusScore& score, bool verbose) {
  std::ostringstream os;
  char buf[128];
  snprintf(buf, sizeof(buf), "TER %.2f%% [ %lld errors / %lld tokens, %zu utterances ]\n",
           100.0 * score.micro_ter(), static_cast<long long>(score.total_errors),
           static_cast<long long>(score.total_ref_tokens), score.utterances.size());
  os << buf;
  snprintf(buf, sizeof(buf), "errors: punc %lld, cap %lld, itn %lld, lexical %lld\n",
           static_cast<long long>(score.breakdown.punctuation),
           static_cast<long long>(score.breakdown.capitalization),
           static_cast<long long>(score.breakdown.itn),
           static_cast<long long>(score.breakdown.lexical));
  os << buf;
  if (score.has_datasets()) {
    for (const auto& [name, t] : score.dataset_ter) {
      snprintf(buf, sizeof(buf), "dataset %s TER %.2f%%\n", name.c_str(), 100.0 * t);
      os << buf;
    }
    snprintf(buf, sizeof(buf), "macro-average TER %.2f%%\n", 100.0 * score.macro_ter());
    os << buf;
  }
  if (verbose) {
    for (const UtteranceScore& u : score.utterances) {
      snprintf(buf, sizeof(buf),
               "%s TER %.2f%% errors %lld/%lld punc %lld cap %lld itn %lld lex %lld\n",
               u.id.c_str(), 100.0 * u.ter(), static_cast<long long>(u.errors),
               static_cast<long long>(u.ref_tokens),
               static_cast<long long>(u.breakdown.punctuation),
               static_cast<long long>(u.breakdown.capitalization),
               static_cast<long long>(u.breakdown.itn),
               static_cast<long long>(u.breakdown.lexical));
      os << buf;
    }
  }
  return os.str();
}

std::string format_report_tsv(const CorpusScore& score, bool verbose) {
  std::ostringstream os;
  os << "scope\tid\tter\terrors\tref_tokens\tpunc\tcap\titn\tlexical\n";
  char buf[192];
  auto row = [&](const char* scope, const std::string& id, double t, int64_t errors,
                 int64_t tokens, const ErrorBreakdown& b) {
    snprintf(buf, sizeof(buf), "%s\t%s\t%.6f\t%lld\t%lld\t%lld\t%lld\t%lld\t%lld\n",
             scope, id.c_str(), t, static_cast<long long>(errors),
             static_cast<long long>(tokens), static_cast<long long>(b.punctuation),
             static_cast<long long>(b.capitalization), static_cast<long long>(b.itn),
             static_cast<long long>(b.lexical));
    os << buf;
  };
  row("corpus", "-", score.micro_ter(), score.total_errors, score.total_ref_tokens,
      score.breakdown);
  if (verbose)
    for (const UtteranceScore& u : score.utterances)
      row("utterance", u.id, u.ter(), u.errors, u.ref_tokens, u.breakdown);
  return os.str();
}

}  // namespace speechlm
