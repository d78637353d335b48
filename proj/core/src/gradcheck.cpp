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

#include "speechlm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace speechlm {

double grad_check(const std::function<Var()>& f, const std::vector<Var>& params,
                  double epsilon) {
  check(epsilon > 0.0 && epsilon <= 1e-3, "grad_check: epsilon must be in (0, 1e-3]");
  for (const Var& p : params)
    check(p->value.all_finite(), "grad_check: non-finite parameter value");

  zero_grads(params);
  Var loss = f();
  check(loss->value.size() == 1, "grad_check: function must return a scalar");
  check(std::isfinite(loss->value.at(0)), "grad_check: non-finite loss");
  backward(loss);

  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Var& p : params)
    analytic.push_back(p->grad.empty() ? Tensor(p->value.shape()) : p->grad);

  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& value = params[pi]->value;
    for (int64_t i = 0; i < value.size(); ++i) {
      const double orig = value.at(i);
      value.at(i) = orig + epsilon;
      const double up = f()->value.at(0);
      value.at(i) = orig - epsilon;
      const double down = f()->value.at(0);
      value.at(i) = orig;
      if (!std::isfinite(up) || !std::isfinite(down))
        fail("grad_check: non-finite loss while perturbing parameter " +
             std::to_string(pi) + " entry " + std::to_string(i));
      const double numeric = (up - down) / (2.0 * epsilon);
      const double exact = analytic[pi].at(i);
      const double denom = std::max({std::fabs(exact), std::fabs(numeric), 1e-8});
      max_rel = std::max(max_rel, std::fabs(exact - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace speechlm
