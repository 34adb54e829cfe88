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

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace splab {

enum class OptimizerKind { Adam, Sgd };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  friend bool operator==(const AdamParams&, const AdamParams&) = default;
};

/// First-order optimizer over a fixed list of parameter blocks. Block i of
/// every step() call must have the size registered at construction.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, AdamParams adam,
            std::vector<std::size_t> block_sizes);

  /// Begins a new step (bias-correction counter for Adam).
  void begin_step() noexcept { ++t_; }
  void update(std::size_t block, std::span<double> params, std::span<const double> grads);

  std::size_t steps_taken() const noexcept { return t_; }

 private:
  OptimizerKind kind_;
  double lr_;
  AdamParams adam_;
  std::vector<std::size_t> sizes_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace splab
