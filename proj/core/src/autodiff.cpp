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

#include "speechlm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace speechlm {

namespace detail {

void matmul_acc(const double* a, int64_t m, int64_t k, const double* b,
                int64_t n, double* c) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt_acc(const double* a, int64_t m, int64_t k, const double* b,
                   int64_t n, double* c) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (int64_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      crow[j] += s;
    }
  }
}

void matmul_tn_acc(const double* a, int64_t m, int64_t k, const double* b,
                   int64_t n, double* c) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t p = 0; p < k; ++p) {
      const double av = arow[p];
      double* crow = c + p * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

using detail::matmul_acc;
using detail::matmul_nt_acc;
using detail::matmul_tn_acc;

namespace {

Var make_node(Tensor value, std::vector<Var> parents,
              std::function<void(VarNode&)> backward_fn) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  node->parents = std::move(parents);
  for (const Var& p : node->parents) {
    if (p->requires_grad) {
      node->requires_grad = true;
      break;
    }
  }
  if (node->requires_grad) node->backward_fn = std::move(backward_fn);
  return node;
}

bool wants_grad(const Var& v) { return v->requires_grad; }

}  // namespace

Var constant(Tensor value) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  return node;
}

Var make_param(Tensor value) {
  auto node = std::make_shared<VarNode>();
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

void backward(const Var& loss) {
  check(loss->value.size() == 1, "backward: loss must be scalar");
  if (!loss->requires_grad) return;

  struct Frame {
    VarNode* node;
    size_t next_parent;
  };
  std::vector<VarNode*> topo;
  std::unordered_set<VarNode*> visited;
  std::vector<Frame> stack;
  stack.push_back({loss.get(), 0});
  visited.insert(loss.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      VarNode* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) {
        stack.push_back({p, 0});
      }
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  loss->ensure_grad().at(0) = 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    VarNode* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

void zero_grads(const std::vector<Var>& params) {
  for (const Var& p : params) p->zero_grad();
}

// ---- elementwise ----------------------------------------------------------

Var add(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) fail_shape("add", a->value, b->value);
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a->value.at(i) + b->value.at(i);
  return make_node(std::move(out), {a, b}, [a, b](VarNode& self) {
    const int64_t n = self.grad.size();
    if (wants_grad(a)) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga.at(i) += self.grad.at(i);
    }
    if (wants_grad(b)) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gb.at(i) += self.grad.at(i);
    }
  });
}

Var sub(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) fail_shape("sub", a->value, b->value);
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a->value.at(i) - b->value.at(i);
  return make_node(std::move(out), {a, b}, [a, b](VarNode& self) {
    const int64_t n = self.grad.size();
    if (wants_grad(a)) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga.at(i) += self.grad.at(i);
    }
    if (wants_grad(b)) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gb.at(i) -= self.grad.at(i);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  if (!a->value.same_shape(b->value)) fail_shape("mul", a->value, b->value);
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a->value.at(i) * b->value.at(i);
  return make_node(std::move(out), {a, b}, [a, b](VarNode& self) {
    const int64_t n = self.grad.size();
    if (wants_grad(a)) {
      Tensor& ga = a->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ga.at(i) += self.grad.at(i) * b->value.at(i);
    }
    if (wants_grad(b)) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < n; ++i) gb.at(i) += self.grad.at(i) * a->value.at(i);
    }
  });
}

Var scale(const Var& a, double c) {
  Tensor out(a->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) out.at(i) = a->value.at(i) * c;
  return make_node(std::move(out), {a}, [a, c](VarNode& self) {
    if (!wants_grad(a)) return;
    Tensor& ga = a->ensure_grad();
    const int64_t n = self.grad.size();
    for (int64_t i = 0; i < n; ++i) ga.at(i) += self.grad.at(i) * c;
  });
}

// ---- linear algebra -------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows())
    fail_shape("matmul", av, bv);
  const int64_t m = av.rows(), k = av.cols(), n = bv.cols();
  Tensor out({m, n});
  matmul_acc(av.data(), m, k, bv.data(), n, out.data());
  return make_node(std::move(out), {a, b}, [a, b, m, k, n](VarNode& self) {
    if (wants_grad(a))
      matmul_nt_acc(self.grad.data(), m, n, b->value.data(), k,
                    a->ensure_grad().data());
    if (wants_grad(b))
      matmul_tn_acc(a->value.data(), m, k, self.grad.data(), n,
                    b->ensure_grad().data());
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  const Tensor& av = a->value;
  const Tensor& bv = b->value;
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.cols())
    fail_shape("matmul_nt", av, bv);
  const int64_t m = av.rows(), k = av.cols(), n = bv.rows();
  Tensor out({m, n});
  matmul_nt_acc(av.data(), m, k, bv.data(), n, out.data());
  return make_node(std::move(out), {a, b}, [a, b, m, k, n](VarNode& self) {
    if (wants_grad(a))
      matmul_acc(self.grad.data(), m, n, b->value.data(), k,
                 a->ensure_grad().data());
    if (wants_grad(b))
      matmul_tn_acc(self.grad.data(), m, n, a->value.data(), k,
                    b->ensure_grad().data());
  });
}

Var affine(const Var& x, const Var& w, const Var& b) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  const Tensor& bv = b->value;
  if (xv.rank() != 2 || wv.rank() != 2 || xv.cols() != wv.rows())
    fail_shape("affine", xv, wv);
  if (bv.rank() != 1 || bv.cols() != wv.cols()) fail_shape("affine", wv, bv);
  const int64_t m = xv.rows(), k = xv.cols(), n = wv.cols();
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i)
    std::copy(bv.data(), bv.data() + n, out.data() + i * n);
  matmul_acc(xv.data(), m, k, wv.data(), n, out.data());
  return make_node(std::move(out), {x, w, b}, [x, w, b, m, k, n](VarNode& self) {
    if (wants_grad(x))
      matmul_nt_acc(self.grad.data(), m, n, w->value.data(), k,
                    x->ensure_grad().data());
    if (wants_grad(w))
      matmul_tn_acc(x->value.data(), m, k, self.grad.data(), n,
                    w->ensure_grad().data());
    if (wants_grad(b)) {
      Tensor& gb = b->ensure_grad();
      for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) gb.at(j) += self.grad.at(i, j);
    }
  });
}

Var gather_rows(const Var& table, const std::vector<int>& ids) {
  const Tensor& tv = table->value;
  check(tv.rank() == 2, "gather_rows: table must be a matrix, got " + tv.shape_str());
  check(!ids.empty(), "gather_rows: empty id list");
  const int64_t v = tv.rows(), d = tv.cols();
  const int64_t l = static_cast<int64_t>(ids.size());
  for (int id : ids)
    check(id >= 0 && id < v, "gather_rows: id " + std::to_string(id) +
                                 " out of range [0," + std::to_string(v) + ")");
  Tensor out({l, d});
  for (int64_t i = 0; i < l; ++i)
    std::copy(tv.data() + ids[i] * d, tv.data() + (ids[i] + 1) * d,
              out.data() + i * d);
  return make_node(std::move(out), {table}, [table, ids, d, l](VarNode& self) {
    if (!wants_grad(table)) return;
    Tensor& gt = table->ensure_grad();
    for (int64_t i = 0; i < l; ++i) {
      double* dst = gt.data() + ids[i] * d;
      const double* src = self.grad.data() + i * d;
      for (int64_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

// ---- normalization and nonlinearity ---------------------------------------

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Tensor& xv = x->value;
  check(xv.rank() == 2, "layer_norm: input must be a matrix, got " + xv.shape_str());
  if (gain->value.rank() != 1 || gain->value.cols() != xv.cols())
    fail_shape("layer_norm", xv, gain->value);
  if (bias->value.rank() != 1 || bias->value.cols() != xv.cols())
    fail_shape("layer_norm", xv, bias->value);
  const int64_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n});
  auto mean = std::make_shared<std::vector<double>>(m);
  auto inv_std = std::make_shared<std::vector<double>>(m);
  for (int64_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double mu = 0.0;
    for (int64_t j = 0; j < n; ++j) mu += row[j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    (*mean)[i] = mu;
    (*inv_std)[i] = is;
    double* orow = out.data() + i * n;
    for (int64_t j = 0; j < n; ++j)
      orow[j] = (row[j] - mu) * is * gain->value.at(j) + bias->value.at(j);
  }
  return make_node(std::move(out), {x, gain, bias},
                   [x, gain, bias, mean, inv_std, m, n](VarNode& self) {
    for (int64_t i = 0; i < m; ++i) {
      const double* row = x->value.data() + i * n;
      const double* grow = self.grad.data() + i * n;
      const double mu = (*mean)[i];
      const double is = (*inv_std)[i];
      // dxhat, and the two row sums the chain rule needs
      double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const double xhat = (row[j] - mu) * is;
        const double dxhat = grow[j] * gain->value.at(j);
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
      }
      if (wants_grad(x)) {
        Tensor& gx = x->ensure_grad();
        double* gxrow = gx.data() + i * n;
        const double inv_n = 1.0 / static_cast<double>(n);
        for (int64_t j = 0; j < n; ++j) {
          const double xhat = (row[j] - mu) * is;
          const double dxhat = grow[j] * gain->value.at(j);
          gxrow[j] += is * (dxhat - inv_n * sum_dxhat - xhat * inv_n * sum_dxhat_xhat);
        }
      }
      if (wants_grad(gain)) {
        Tensor& gg = gain->ensure_grad();
        for (int64_t j = 0; j < n; ++j)
          gg.at(j) += grow[j] * (row[j] - mu) * is;
      }
      if (wants_grad(bias)) {
        Tensor& gb = bias->ensure_grad();
        for (int64_t j = 0; j < n; ++j) gb.at(j) += grow[j];
      }
    }
  });
}

Var gelu(const Var& x) {
  static const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
  static const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
  Tensor out(x->value.shape());
  const int64_t n = out.size();
  for (int64_t i = 0; i < n; ++i) {
    const double v = x->value.at(i);
    out.at(i) = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
  }
  return make_node(std::move(out), {x}, [x](VarNode& self) {
    if (!wants_grad(x)) return;
    Tensor& gx = x->ensure_grad();
    const int64_t n = self.grad.size();
    for (int64_t i = 0; i < n; ++i) {
      const double v = x->value.at(i);
      const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      gx.at(i) += self.grad.at(i) * (cdf + v * pdf);
    }
  });
}

// ---- softmax family --------------------------------------------------------

namespace {

// Row softmax with max subtraction, written into out (same shape as in).
void softmax_rows_raw(const double* in, int64_t m, int64_t n, double* out) {
  for (int64_t i = 0; i < m; ++i) {
    const double* row = in + i * n;
    double* orow = out + i * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      z += orow[j];
    }
    const double inv = 1.0 / z;
    for (int64_t j = 0; j < n; ++j) orow[j] *= inv;
  }
}

}  // namespace

Var softmax_rows(const Var& x) {
  const Tensor& xv = x->value;
  check(xv.rank() == 2 && xv.cols() >= 1, "softmax_rows: bad shape " + xv.shape_str());
  const int64_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n});
  softmax_rows_raw(xv.data(), m, n, out.data());
  return make_node(std::move(out), {x}, [x, m, n](VarNode& self) {
    if (!wants_grad(x)) return;
    Tensor& gx = x->ensure_grad();
    for (int64_t i = 0; i < m; ++i) {
      const double* p = self.value.data() + i * n;
      const double* g = self.grad.data() + i * n;
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j) dot += p[j] * g[j];
      double* gxrow = gx.data() + i * n;
      for (int64_t j = 0; j < n; ++j) gxrow[j] += p[j] * (g[j] - dot);
    }
  });
}

Var log_softmax_rows(const Var& x) {
  const Tensor& xv = x->value;
  check(xv.rank() == 2 && xv.cols() >= 1,
        "log_softmax_rows: bad shape " + xv.shape_str());
  const int64_t m = xv.rows(), n = xv.cols();
  Tensor out({m, n});
  for (int64_t i = 0; i < m; ++i) {
    const double* row = xv.data() + i * n;
    double* orow = out.data() + i * n;
    double mx = row[0];
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (int64_t j = 0; j < n; ++j) orow[j] = row[j] - lse;
  }
  return make_node(std::move(out), {x}, [x, m, n](VarNode& self) {
    if (!wants_grad(x)) return;
    Tensor& gx = x->ensure_grad();
    for (int64_t i = 0; i < m; ++i) {
      const double* lsm = self.value.data() + i * n;
      const double* g = self.grad.data() + i * n;
      double gsum = 0.0;
      for (int64_t j = 0; j < n; ++j) gsum += g[j];
      double* gxrow = gx.data() + i * n;
      for (int64_t j = 0; j < n; ++j) gxrow[j] += g[j] - std::exp(lsm[j]) * gsum;
    }
  });
}

// ---- attention -------------------------------------------------------------

Var multihead_attention(const Var& q, const Var& k, const Var& v, int heads,
                        bool causal, int64_t key_valid) {
  const Tensor& qv = q->value;
  const Tensor& kv = k->value;
  const Tensor& vv = v->value;
  if (qv.rank() != 2 || kv.rank() != 2 || qv.cols() != kv.cols())
    fail_shape("attention", qv, kv);
  if (!kv.same_shape(vv)) fail_shape("attention", kv, vv);
  check(heads >= 1 && qv.cols() % heads == 0,
        "attention: embed dim " + std::to_string(qv.cols()) +
            " not divisible by heads " + std::to_string(heads));
  const int64_t tq = qv.rows(), tk = kv.rows(), d = qv.cols();
  const int64_t dh = d / heads;
  check(!causal || tq == tk, "attention: causal mask requires square attention");
  check(key_valid != 0, "attention: key_valid must leave at least one key");
  const double isc = 1.0 / std::sqrt(static_cast<double>(dh));
  const int64_t kv_limit = key_valid < 0 ? tk : std::min<int64_t>(key_valid, tk);

  // One softmaxed score matrix per head, kept for the backward pass.
  auto probs = std::make_shared<std::vector<Tensor>>();
  probs->reserve(static_cast<size_t>(heads));
  Tensor out({tq, d});
  std::vector<double> scores(static_cast<size_t>(tq * tk));
  for (int h = 0; h < heads; ++h) {
    const int64_t off = h * dh;
    for (int64_t i = 0; i < tq; ++i) {
      const double* qrow = qv.data() + i * d + off;
      double* srow = scores.data() + i * tk;
      const int64_t jmax = causal ? std::min<int64_t>(i + 1, kv_limit) : kv_limit;
      for (int64_t j = 0; j < jmax; ++j) {
        const double* krow = kv.data() + j * d + off;
        double s = 0.0;
        for (int64_t p = 0; p < dh; ++p) s += qrow[p] * krow[p];
        srow[j] = s * isc;
      }
      for (int64_t j = jmax; j < tk; ++j) srow[j] = -1e300;
    }
    Tensor p({tq, tk});
    softmax_rows_raw(scores.data(), tq, tk, p.data());
    for (int64_t i = 0; i < tq; ++i) {
      const double* prow = p.data() + i * tk;
      double* orow = out.data() + i * d + off;
      for (int64_t j = 0; j < tk; ++j) {
        const double pij = prow[j];
        if (pij == 0.0) continue;
        const double* vrow = vv.data() + j * d + off;
        for (int64_t p2 = 0; p2 < dh; ++p2) orow[p2] += pij * vrow[p2];
      }
    }
    probs->push_back(std::move(p));
  }

  return make_node(std::move(out), {q, k, v},
                   [q, k, v, probs, heads, tq, tk, d, dh, isc](VarNode& self) {
    std::vector<double> dp(static_cast<size_t>(tq * tk));
    std::vector<double> ds(static_cast<size_t>(tq * tk));
    for (int h = 0; h < heads; ++h) {
      const int64_t off = h * dh;
      const Tensor& p = (*probs)[static_cast<size_t>(h)];
      // dP = dOut_h * V_h^T
      std::fill(dp.begin(), dp.end(), 0.0);
      for (int64_t i = 0; i < tq; ++i) {
        const double* grow = self.grad.data() + i * d + off;
        double* dprow = dp.data() + i * tk;
        for (int64_t j = 0; j < tk; ++j) {
          const double* vrow = v->value.data() + j * d + off;
          double s = 0.0;
          for (int64_t p2 = 0; p2 < dh; ++p2) s += grow[p2] * vrow[p2];
          dprow[j] = s;
        }
      }
      // dS = P o (dP - rowsum(dP o P)); masked entries have P == 0.
      for (int64_t i = 0; i < tq; ++i) {
        const double* prow = p.data() + i * tk;
        const double* dprow = dp.data() + i * tk;
        double dot = 0.0;
        for (int64_t j = 0; j < tk; ++j) dot += prow[j] * dprow[j];
        double* dsrow = ds.data() + i * tk;
        for (int64_t j = 0; j < tk; ++j) dsrow[j] = prow[j] * (dprow[j] - dot);
      }
      if (wants_grad(v)) {
        Tensor& gv = v->ensure_grad();
        for (int64_t i = 0; i < tq; ++i) {
          const double* prow = p.data() + i * tk;
          const double* grow = self.grad.data() + i * d + off;
          for (int64_t j = 0; j < tk; ++j) {
            const double pij = prow[j];
            if (pij == 0.0) continue;
            double* gvrow = gv.data() + j * d + off;
            for (int64_t p2 = 0; p2 < dh; ++p2) gvrow[p2] += pij * grow[p2];
          }
        }
      }
      if (wants_grad(q)) {
        Tensor& gq = q->ensure_grad();
        for (int64_t i = 0; i < tq; ++i) {
          const double* dsrow = ds.data() + i * tk;
          double* gqrow = gq.data() + i * d + off;
          for (int64_t j = 0; j < tk; ++j) {
            const double sij = dsrow[j] * isc;
            if (sij == 0.0) continue;
            const double* krow = k->value.data() + j * d + off;
            for (int64_t p2 = 0; p2 < dh; ++p2) gqrow[p2] += sij * krow[p2];
          }
        }
      }
      if (wants_grad(k)) {
        Tensor& gk = k->ensure_grad();
        for (int64_t i = 0; i < tq; ++i) {
          const double* dsrow = ds.data() + i * tk;
          const double* qrow = q->value.data() + i * d + off;
          for (int64_t j = 0; j < tk; ++j) {
            const double sij = dsrow[j] * isc;
            if (sij == 0.0) continue;
            double* gkrow = gk.data() + j * d + off;
            for (int64_t p2 = 0; p2 < dh; ++p2) gkrow[p2] += sij * qrow[p2];
          }
        }
      }
    }
  });
}

// ---- time-axis ops ---------------------------------------------------------

Var conv1d_time(const Var& x, const Var& w, const Var& b, int kernel, int stride) {
  const Tensor& xv = x->value;
  const Tensor& wv = w->value;
  const Tensor& bv = b->value;
  check(kernel >= 1 && kernel % 2 == 1, "conv1d_time: kernel must be odd");
  check(stride >= 1, "conv1d_time: stride must be positive");
  check(xv.rank() == 2, "conv1d_time: input must be a matrix, got " + xv.shape_str());
  const int64_t t_in = xv.rows(), d_in = xv.cols();
  if (wv.rank() != 2 || wv.rows() != kernel * d_in) fail_shape("conv1d_time", xv, wv);
  const int64_t d_out = wv.cols();
  if (bv.rank() != 1 || bv.cols() != d_out) fail_shape("conv1d_time", wv, bv);
  const int64_t t_out = (t_in + stride - 1) / stride;
  const int64_t pad = (kernel - 1) / 2;

  Tensor out({t_out, d_out});
  for (int64_t t = 0; t < t_out; ++t) {
    double* orow = out.data() + t * d_out;
    std::copy(bv.data(), bv.data() + d_out, orow);
    for (int64_t j = 0; j < kernel; ++j) {
      const int64_t src = t * stride + j - pad;
      if (src < 0 || src >= t_in) continue;
      const double* xrow = xv.data() + src * d_in;
      const double* wblk = wv.data() + j * d_in * d_out;
      matmul_acc(xrow, 1, d_in, wblk, d_out, orow);
    }
  }
  return make_node(std::move(out), {x, w, b},
                   [x, w, b, kernel, stride, t_in, d_in, d_out, t_out, pad](VarNode& self) {
    for (int64_t t = 0; t < t_out; ++t) {
      const double* grow = self.grad.data() + t * d_out;
      if (wants_grad(b)) {
        Tensor& gb = b->ensure_grad();
        for (int64_t o = 0; o < d_out; ++o) gb.at(o) += grow[o];
      }
      for (int64_t j = 0; j < kernel; ++j) {
        const int64_t src = t * stride + j - pad;
        if (src < 0 || src >= t_in) continue;
        if (wants_grad(x)) {
          const double* wblk = w->value.data() + j * d_in * d_out;
          double* gxrow = x->ensure_grad().data() + src * d_in;
          matmul_nt_acc(grow, 1, d_out, wblk, d_in, gxrow);
        }
        if (wants_grad(w)) {
          const double* xrow = x->value.data() + src * d_in;
          double* gwblk = w->ensure_grad().data() + j * d_in * d_out;
          matmul_tn_acc(xrow, 1, d_in, grow, d_out, gwblk);
        }
      }
    }
  });
}

Var cross_entropy(const Var& logits, const std::vector<int>& targets) {
  const Tensor& lv = logits->value;
  check(lv.rank() == 2, "cross_entropy: logits must be a matrix, got " + lv.shape_str());
  const int64_t l = lv.rows(), v = lv.cols();
  check(static_cast<int64_t>(targets.size()) == l,
        "cross_entropy: " + std::to_string(targets.size()) + " targets for " +
            std::to_string(l) + " logit rows");
  int64_t counted = 0;
  for (int t : targets) {
    if (t < 0) continue;
    check(t < v, "cross_entropy: target id " + std::to_string(t) + " out of range");
    ++counted;
  }
  check(counted > 0, "cross_entropy: no scored positions");

  auto probs = std::make_shared<Tensor>(std::vector<int64_t>{l, v});
  softmax_rows_raw(lv.data(), l, v, probs->data());
  double loss = 0.0;
  for (int64_t i = 0; i < l; ++i) {
    if (targets[static_cast<size_t>(i)] < 0) continue;
    const double* row = lv.data() + i * v;
    double mx = row[0];
    for (int64_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (int64_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
    loss -= row[targets[static_cast<size_t>(i)]] - mx - std::log(z);
  }
  loss /= static_cast<double>(counted);

  return make_node(Tensor::scalar(loss), {logits},
                   [logits, targets, probs, l, v, counted](VarNode& self) {
    if (!wants_grad(logits)) return;
    const double g = self.grad.at(0) / static_cast<double>(counted);
    Tensor& gl = logits->ensure_grad();
    for (int64_t i = 0; i < l; ++i) {
      const int t = targets[static_cast<size_t>(i)];
      if (t < 0) continue;
      const double* prow = probs->data() + i * v;
      double* grow = gl.data() + i * v;
      for (int64_t j = 0; j < v; ++j) grow[j] += g * prow[j];
      grow[t] -= g;
    }
  });
}

Var concat_rows(const std::vector<Var>& xs) {
  check(!xs.empty(), "concat_rows: empty input list");
  const int64_t n = xs[0]->value.cols();
  int64_t rows = 0;
  for (const Var& x : xs) {
    check(x->value.rank() == 2, "concat_rows: inputs must be matrices");
    if (x->value.cols() != n) fail_shape("concat_rows", xs[0]->value, x->value);
    rows += x->value.rows();
  }
  Tensor out({rows, n});
  int64_t r = 0;
  for (const Var& x : xs) {
    std::copy(x->value.data(), x->value.data() + x->value.size(),
              out.data() + r * n);
    r += x->value.rows();
  }
  return make_node(std::move(out), xs, [xs, n](VarNode& self) {
    int64_t r = 0;
    for (const Var& x : xs) {
      const int64_t m = x->value.rows();
      if (wants_grad(x)) {
        Tensor& gx = x->ensure_grad();
        const double* src = self.grad.data() + r * n;
        for (int64_t i = 0; i < m * n; ++i) gx.at(i) += src[i];
      }
      r += m;
    }
  });
}

Var slice_rows(const Var& x, int64_t row0, int64_t row1) {
  const Tensor& xv = x->value;
  check(xv.rank() == 2, "slice_rows: input must be a matrix");
  check(0 <= row0 && row0 < row1 && row1 <= xv.rows(),
        "slice_rows: range [" + std::to_string(row0) + "," + std::to_string(row1) +
            ") out of bounds for " + xv.shape_str());
  const int64_t n = xv.cols(), m = row1 - row0;
  Tensor out({m, n});
  std::copy(xv.data() + row0 * n, xv.data() + row1 * n, out.data());
  return make_node(std::move(out), {x}, [x, row0, m, n](VarNode& self) {
    if (!wants_grad(x)) return;
    Tensor& gx = x->ensure_grad();
    double* dst = gx.data() + row0 * n;
    for (int64_t i = 0; i < m * n; ++i) dst[i] += self.grad.at(i);
  });
}

}  // namespace speechlm
