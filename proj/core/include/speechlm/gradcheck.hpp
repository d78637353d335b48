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

#ifndef SPEECHLM_GRADCHECK_HPP_
#define SPEECHLM_GRADCHECK_HPP_

#include <functional>
#include <vector>

#include "speechlm/autodiff.hpp"

namespace speechlm {

// Compares the analytic gradient of a deterministic scalar function against
// central finite differences over every entry of every parameter.  Returns
// max |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Var()>& f, const std::vector<Var>& params,
                  double epsilon);

}  // namespace speechlm

#endif  // SPEECHLM_GRADCHECK_HPP_
