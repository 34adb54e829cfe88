// Copyright 2026 The splab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "splab/optim.hpp"

#include <cmath>
#include <string>

#include "splab/errors.hpp"

namespace splab {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "sgd") return OptimizerKind::Sgd;
  throw ContractError("unknown optimizer '" + std::string(s) + "' (expected adam|sgd)");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, AdamParams adam,
                     std::vector<std::size_t> block_sizes)
    : kind_(kind), lr_(learning_rate), adam_(adam), sizes_(std::move(block_sizes)) {
  SPLAB_REQUIRE(learning_rate > 0.0, "optimizer: learning rate must be > 0");
  if (kind_ == OptimizerKind::Adam) {
    for (std::size_t n : sizes_) {
      m_.emplace_back(n, 0.0);
      v_.emplace_back(n, 0.0);
    }
  }
}

void Optimizer::update(std::size_t block, std::span<double> params,
                       std::span<const double> grads) {
  SPLAB_REQUIRE(block < sizes_.size(), "optimizer: unknown block");
  SPLAB_REQUIRE(params.size() == sizes_[block] && grads.size() == params.size(),
                "optimizer: block size mismatch");
  if (kind_ == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr_ * grads[i];
    return;
  }
  const double b1 = adam_.beta1;
  const double b2 = adam_.beta2;
  const double t = static_cast<double>(t_ == 0 ? 1 : t_);
  const double c1 = 1.0 / (1.0 - std::pow(b1, t));
  const double c2 = 1.0 / (1.0 - std::pow(b2, t));
  auto& m = m_[block];
  auto& v = v_[block];
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    params[i] -= lr_ * (m[i] * c1) / (std::sqrt(v[i] * c2) + adam_.epsilon);
  }
}

}  // namespace splab
