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

#ifndef SPEECHLM_CTC_HPP_
#define SPEECHLM_CTC_HPP_

#include <vector>

#include "speechlm/autodiff.hpp"
#include "speechlm/tokenizer.hpp"

namespace speechlm {

// Per-frame log-probabilities over vocabulary (blank at column 0).
struct PosteriorLattice {
  Tensor log_probs;  // [T, V]

  int64_t frames() const { return log_probs.rows(); }
  int64_t classes() const { return log_probs.cols(); }
  // Enforces T >= 1, V >= 2 and per-row normalization within 1e-9.
  void validate() const;
};

struct DownsampleResult {
  std::vector<int64_t> kept_indices;  // strictly increasing, never empty
  Var hidden;                         // kept rows, differentiable
  double threshold_used = 0.0;
};

// Negative log-likelihood of the blank-augmented alignment sum, forward DP
// in the log domain.  Targets must not contain blank (id 0); throws
// "infeasible alignment" when T is shorter than the target allows.
Var ctc_loss(const Var& log_probs, const TokenSequence& target);
double ctc_loss_value(const PosteriorLattice& lattice, const TokenSequence& target);

// exp of column 0.
std::vector<double> blank_posteriors(const PosteriorLattice& lattice);

// Keeps frames with blank probability <= threshold (so threshold 1.0 is the
// identity); when every frame is blank-dominated, keeps the single frame
// with the lowest blank probability (first index on ties).
DownsampleResult downsample(const Var& hidden, const std::vector<double>& blank_probs,
                            double threshold);

// Per-frame argmax, collapse consecutive repeats, drop blanks.
TokenSequence greedy_decode(const PosteriorLattice& lattice);

// Smallest frame count that can emit the target (adjacent repeats need a
// separating blank).
int64_t min_feasible_frames(const TokenSequence& target);

}  // namespace speechlm

#endif  // SPEECHLM_CTC_HPP_
