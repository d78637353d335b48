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

#include "speechlm/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace speechlm {

namespace {

constexpr double kLogZero = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  const double mx = std::max(a, b);
  return mx + std::log1p(std::exp(std::min(a, b) - mx));
}

// Expanded label sequence b, y1, b, y2, ..., yn, b.
std::vector<int> expand_labels(const TokenSequence& target) {
  std::vector<int> labels;
  labels.reserve(2 * target.size() + 1);
  labels.push_back(kBlankId);
  for (int y : target) {
    labels.push_back(y);
    labels.push_back(kBlankId);
  }
  return labels;
}

}  // namespace

void PosteriorLattice::validate() const {
  check(log_probs.rank() == 2, "lattice: log_probs must be a matrix");
  const int64_t t = frames(), v = classes();
  check(t >= 1, "lattice: need at least one frame");
  check(v >= 2, "lattice: need blank plus at least one class");
  for (int64_t i = 0; i < t; ++i) {
    double sum = 0.0;
    for (int64_t j = 0; j < v; ++j) sum += std::exp(log_probs.at(i, j));
    check(std::fabs(sum - 1.0) <= 1e-9,
          "lattice: row " + std::to_string(i) + " exponentiates to " +
              std::to_string(sum) + ", not 1");
  }
}

int64_t min_feasible_frames(const TokenSequence& target) {
  int64_t repeats = 0;
  for (size_t i = 1; i < target.size(); ++i)
    if (target[i] == target[i - 1]) ++repeats;
  return static_cast<int64_t>(target.size()) + repeats;
}

Var ctc_loss(const Var& log_probs, const TokenSequence& target) {
  const Tensor& lp = log_probs->value;
  check(lp.rank() == 2, "ctc_loss: log_probs must be a matrix");
  const int64_t t_max = lp.rows(), v = lp.cols();
  check(!target.empty(), "ctc_loss: empty target");
  for (int y : target)
    check(y > 0 && y < v, "ctc_loss: target id " + std::to_string(y) +
                              " out of range (blank excluded)");
  check(t_max >= min_feasible_frames(target), "infeasible alignment");

  const std::vector<int> labels = expand_labels(target);
  const int64_t s_max = static_cast<int64_t>(labels.size());

  // Forward pass.
  std::vector<double> alpha(static_cast<size_t>(t_max * s_max), kLogZero);
  auto a = [&](int64_t t, int64_t s) -> double& {
    return alpha[static_cast<size_t>(t * s_max + s)];
  };
  a(0, 0) = lp.at(0, labels[0]);
  if (s_max > 1) a(0, 1) = lp.at(0, labels[1]);
  for (int64_t t = 1; t < t_max; ++t) {
    for (int64_t s = 0; s < s_max; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = log_add(acc, a(t - 1, s - 1));
      if (s >= 2 && labels[static_cast<size_t>(s)] != kBlankId &&
          labels[static_cast<size_t>(s)] != labels[static_cast<size_t>(s - 2)])
        acc = log_add(acc, a(t - 1, s - 2));
      if (acc != kLogZero) a(t, s) = acc + lp.at(t, labels[static_cast<size_t>(s)]);
    }
  }
  double log_z = a(t_max - 1, s_max - 1);
  if (s_max > 1) log_z = log_add(log_z, a(t_max - 1, s_max - 2));
  check(log_z != kLogZero, "ctc_loss: zero-probability alignment set");

  const double loss = -log_z;
  std::vector<Var> parents{log_probs};
  auto node = std::make_shared<VarNode>();
  node->value = Tensor::scalar(loss);
  node->parents = std::move(parents);
  node->requires_grad = log_probs->requires_grad;
  if (!node->requires_grad) return node;

  node->backward_fn = [log_probs, target, labels, alpha, t_max, s_max, v,
                       log_z](VarNode& self) {
    if (!log_probs->requires_grad) return;
    const Tensor& lp = log_probs->value;
    // Backward DP: beta[t][s] = log-prob of completing from (t,s), with the
    // emission at t excluded (so alpha + beta covers each path exactly once).
    std::vector<double> beta(static_cast<size_t>(t_max * s_max), kLogZero);
    auto b = [&](int64_t t, int64_t s) -> double& {
      return beta[static_cast<size_t>(t * s_max + s)];
    };
    auto a = [&](int64_t t, int64_t s) {
      return alpha[static_cast<size_t>(t * s_max + s)];
    };
    b(t_max - 1, s_max - 1) = 0.0;
    if (s_max > 1) b(t_max - 1, s_max - 2) = 0.0;
    for (int64_t t = t_max - 2; t >= 0; --t) {
      for (int64_t s = 0; s < s_max; ++s) {
        double acc = b(t + 1, s) == kLogZero
                         ? kLogZero
                         : b(t + 1, s) + lp.at(t + 1, labels[static_cast<size_t>(s)]);
        if (s + 1 < s_max && b(t + 1, s + 1) != kLogZero)
          acc = log_add(acc, b(t + 1, s + 1) +
                                 lp.at(t + 1, labels[static_cast<size_t>(s + 1)]));
        if (s + 2 < s_max && labels[static_cast<size_t>(s + 2)] != kBlankId &&
            labels[static_cast<size_t>(s + 2)] != labels[static_cast<size_t>(s)] &&
            b(t + 1, s + 2) != kLogZero)
          acc = log_add(acc, b(t + 1, s + 2) +
                                 lp.at(t + 1, labels[static_cast<size_t>(s + 2)]));
        b(t, s) = acc;
      }
    }
    // d(-logZ)/d(log p[t,k]) = -sum_{s: label(s)=k} exp(alpha + beta - logZ)
    const double g = self.grad.at(0);
    Tensor& gl = log_probs->ensure_grad();
    std::vector<double> occ(static_cast<size_t>(v));
    for (int64_t t = 0; t < t_max; ++t) {
      std::fill(occ.begin(), occ.end(), kLogZero);
      for (int64_t s = 0; s < s_max; ++s) {
        if (a(t, s) == kLogZero || b(t, s) == kLogZero) continue;
        const int lab = labels[static_cast<size_t>(s)];
        occ[static_cast<size_t>(lab)] =
            log_add(occ[static_cast<size_t>(lab)], a(t, s) + b(t, s));
      }
      for (int64_t k = 0; k < v; ++k) {
        if (occ[static_cast<size_t>(k)] == kLogZero) continue;
        gl.at(t, k) -= g * std::exp(occ[static_cast<size_t>(k)] - log_z);
      }
    }
  };
  return node;
}

double ctc_loss_value(const PosteriorLattice& lattice, const TokenSequence& target) {
  return ctc_loss(constant(lattice.log_probs), target)->value.at(0);
}

std::vector<double> blank_posteriors(const PosteriorLattice& lattice) {
  const int64_t t = lattice.frames();
  std::vector<double> out(static_cast<size_t>(t));
  for (int64_t i = 0; i < t; ++i)
    out[static_cast<size_t>(i)] = std::exp(lattice.log_probs.at(i, kBlankId));
  return out;
}

DownsampleResult downsample(const Var& hidden, const std::vector<double>& blank_probs,
                            double threshold) {
  const int64_t t = hidden->value.rows();
  check(static_cast<int64_t>(blank_probs.size()) == t,
        "downsample: " + std::to_string(blank_probs.size()) +
            " blank probabilities for " + std::to_string(t) + " frames");
  check(threshold > 0.0 && threshold <= 1.0, "downsample: threshold must be in (0,1]");

  DownsampleResult result;
  result.threshold_used = threshold;
  for (int64_t i = 0; i < t; ++i)
    if (blank_probs[static_cast<size_t>(i)] <= threshold)
      result.kept_indices.push_back(i);
  if (result.kept_indices.empty()) {
    const auto it = std::min_element(blank_probs.begin(), blank_probs.end());
    result.kept_indices.push_back(it - blank_probs.begin());
  }
  std::vector<int> ids(result.kept_indices.begin(), result.kept_indices.end());
  result.hidden = gather_rows(hidden, ids);
  return result;
}

TokenSequence greedy_decode(const PosteriorLattice& lattice) {
  const int64_t t = lattice.frames(), v = lattice.classes();
  TokenSequence out;
  int prev = -1;
  for (int64_t i = 0; i < t; ++i) {
    int best = 0;
    double best_lp = lattice.log_probs.at(i, 0);
    for (int64_t j = 1; j < v; ++j) {
      if (lattice.log_probs.at(i, j) > best_lp) {
        best_lp = lattice.log_probs.at(i, j);
        best = static_cast<int>(j);
      }
    }
    if (best != prev && best != kBlankId) out.push_back(best);
    prev = best;
  }
  return out;
}

}  // namespace speechlm
