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
// Reverse-mode automatic differentiation over dense tensors.
//
// Each operation builds a fresh graph node holding its forward value and a
// closure that routes the node's gradient into its parents.  Parameters are
// leaf nodes whose gradient buffers persist and accumulate additively across
// backward passes until zero_grad(); everything else is per-forward scratch.
//
// Provided (all with gradients): matmul / matmul_nt, elementwise add / sub /
// mul, scale, affine, embedding lookup (gather_rows), layer_norm, gelu,
// softmax_rows / log_softmax_rows (max-subtracted), multi-head scaled
// dot-product attention with causal and key-padding masks, strided 1-D
// convolution over time, cross-entropy over logits with ignore positions,
// and concat_rows / slice_rows along the time axis.

#ifndef SPEECHLM_AUTODIFF_HPP_
#define SPEECHLM_AUTODIFF_HPP_

#include <functional>
#include <memory>
#include <vector>

#include "speechlm/tensor.hpp"

namespace speechlm {

struct VarNode;
using Var = std::shared_ptr<VarNode>;

struct VarNode {
  Tensor value;
  Tensor grad;  // empty until first touched; same shape as value afterwards
  bool requires_grad = false;
  std::vector<Var> parents;
  std::function<void(VarNode&)> backward_fn;  // pulls this->grad into parents

  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor(value.shape());
    return grad;
  }
  void zero_grad() {
    if (!grad.empty()) grad.fill(0.0);
  }
};

// Leaf constructors.
Var constant(Tensor value);
Var make_param(Tensor value);  // requires_grad = true

// Runs reverse accumulation from a scalar loss.  Gradients are *added* to
// whatever is already in reachable leaves; call zero_grads first for a
// plain gradient.
void backward(const Var& loss);

void zero_grads(const std::vector<Var>& params);

// ---- operations ----------------------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);

Var matmul(const Var& a, const Var& b);     // [m,k] x [k,n]
Var matmul_nt(const Var& a, const Var& b);  // [m,k] x [n,k]^T -> [m,n]

// x [m,k] * w [k,n] + b [n] broadcast over rows.
Var affine(const Var& x, const Var& w, const Var& b);

// Row lookup; gradient scatter-adds into the table.
Var gather_rows(const Var& table, const std::vector<int>& ids);

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
Var gelu(const Var& x);

Var softmax_rows(const Var& x);
Var log_softmax_rows(const Var& x);

// q [Tq,D], k/v [Tk,D].  With causal set, query i attends to keys j <= i
// (requires Tq == Tk).  key_valid >= 0 masks keys at index >= key_valid.
Var multihead_attention(const Var& q, const Var& k, const Var& v, int heads,
                        bool causal, int64_t key_valid = -1);

// x [T,Din], w [kernel*Din,Dout], b [Dout].  Zero-padded so that the output
// has exactly ceil(T/stride) rows; kernel must be odd.
Var conv1d_time(const Var& x, const Var& w, const Var& b, int kernel, int stride);

// Mean cross-entropy of logits [L,V] against targets (-1 entries ignored).
Var cross_entropy(const Var& logits, const std::vector<int>& targets);

Var concat_rows(const std::vector<Var>& xs);
Var slice_rows(const Var& x, int64_t row0, int64_t row1);  // [row0,row1)

// Raw kernels, shared with op backward passes.
namespace detail {
void matmul_acc(const double* a, int64_t m, int64_t k, const double* b,
                int64_t n, double* c);  // c += a*b, c [m,n]
void matmul_nt_acc(const double* a, int64_t m, int64_t k, const double* b,
                   int64_t n, double* c);  // c += a*b^T, b is [n,k]
void matmul_tn_acc(const double* a, int64_t m, int64_t k, const double* b,
                   int64_t n, double* c);  // c += a^T*b, a is [m,k], c [k,n]
}  // namespace detail

}  // namespace speechlm

#endif  // SPEECHLM_AUTODIFF_HPP_
