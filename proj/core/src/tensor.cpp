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

#include "speechlm/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace speechlm {

namespace {
int64_t shape_product(const std::vector<int64_t>& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    check(d >= 0, "tensor: negative dimension");
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
  check(shape_.size() >= 1 && shape_.size() <= 2, "tensor: rank must be 1 or 2");
  data_.assign(static_cast<size_t>(shape_product(shape_)), 0.0);
}

Tensor::Tensor(std::vector<int64_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  check(shape_.size() >= 1 && shape_.size() <= 2, "tensor: rank must be 1 or 2");
  check(shape_product(shape_) == static_cast<int64_t>(data_.size()),
        "tensor: shape/data length mismatch");
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape_.size(); ++i) {
    if (i) os << ",";
    os << shape_[i];
  }
  os << "]";
  return os.str();
}

void fail_shape(const std::string& op, const Tensor& a, const Tensor& b) {
  fail(op + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void fail_shape(const std::string& op, const Tensor& a) {
  fail(op + ": bad shape " + a.shape_str());
}

}  // namespace speechlm
