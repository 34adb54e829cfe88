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

// Standard and adversarial training of the toy model.
//
// Every step draws a fresh batch (infinite-data regime). Randomness is split
// into three streams hanging off the run's root Rng so that the standard and
// adversarial loops see the same initialisation and the same batches:
//
//   init    root.substream(kInitStream)
//   batch t root.substream(kBatchStream).substream(t)
//   attack  root.substream(kAttackStream).substream(t)

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "splab/attacks.hpp"
#include "splab/optim.hpp"
#include "splab/toymodel.hpp"

namespace splab {

inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kBatchStream = 2;
inline constexpr std::uint64_t kAttackStream = 3;

struct TrainConfig {
  std::size_t steps = 20000;
  double learning_rate = 1e-3;
  std::size_t batch_size = 1024;
  OptimizerKind optimizer = OptimizerKind::Adam;
  AdamParams adam{};
  /// Clean-loss weight in α·L(x) + (1 − α)·L(x_adv).
  double alpha = 0.5;
  std::optional<AttackConfig> attack;
  std::uint64_t seed = 0;
  /// W ~ N(0, init_stddev); 0 selects 1/√n_hidden.
  double init_stddev = 0.0;
  /// Loss-curve sampling period in steps (the final step is always sampled).
  std::size_t log_every = 1000;

  /// 20k steps, lr 1e-3, batch 1024, Adam, no attack.
  static TrainConfig standard_defaults();
  /// 150k steps, lr 1e-3, batch 1024, Adam, α = 0.5, one-step gradient
  /// attack with ε = 0.1‖x‖₂ per example.
  static TrainConfig adversarial_defaults();

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct LossPoint {
  std::size_t step = 0;
  double clean_loss = 0.0;
  std::optional<double> adv_loss;
};

struct TrainReport {
  double final_clean_loss = 0.0;
  std::optional<double> final_adv_loss;
  std::vector<LossPoint> loss_curve;
  std::size_t wall_steps = 0;
};

/// Called at every sampled loss-curve point.
using ProgressHook = std::function<void(const LossPoint&)>;

std::pair<ToyModel, TrainReport> train_standard(const TrainConfig& cfg, std::size_t n_features,
                                                std::size_t n_hidden, double density,
                                                const Rng& rng,
                                                const ProgressHook& progress = {});

/// Uses Rng(cfg.seed) as the root stream.
std::pair<ToyModel, TrainReport> train_standard(const TrainConfig& cfg, std::size_t n_features,
                                                std::size_t n_hidden, double density,
                                                const ProgressHook& progress = {});

/// Mixture loss α·L(x) + (1 − α)·L(x_adv) with attacks regenerated from the
/// current parameters each step. The perturbation is treated as a constant
/// input (no gradient through the attack). α = 1 skips attack generation
/// except at loss-curve points.
std::pair<ToyModel, TrainReport> train_adversarial(const TrainConfig& cfg,
                                                   std::size_t n_features, std::size_t n_hidden,
                                                   double density, const Rng& rng,
                                                   const ProgressHook& progress = {});

std::pair<ToyModel, TrainReport> train_adversarial(const TrainConfig& cfg,
                                                   std::size_t n_features, std::size_t n_hidden,
                                                   double density,
                                                   const ProgressHook& progress = {});

}  // namespace splab
