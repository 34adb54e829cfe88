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

// Run configuration as a YAML document. Every key is optional; missing keys
// keep their defaults, unknown keys are an error. `to_yaml(RunConfig{})`
// is the full list of keys with their defaults.
//
//   seed: 0
//   threads: 1
//   model:       {n_features, n_hidden}
//   train:       standard TrainConfig (no attack)
//   adversarial: TrainConfig plus alpha and a nested attack block
//   attack:      evaluation AttackConfig
//   sweep:       {densities: <count or explicit list>, density_high,
//                 density_low, eval_batch_size, epsilon_reference}
//   sae:         SAE training and dataset options

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "splab/attacks.hpp"
#include "splab/experiments.hpp"
#include "splab/sae.hpp"
#include "splab/training.hpp"

namespace splab {

struct SaeRunConfig {
  SaeTrainConfig train{};
  StandardizeMode standardize = StandardizeMode::PerDimension;
  /// Toy-model activations collected for SAE training.
  std::size_t n_samples = 65536;
  double density = 0.1;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t n_features = 100;
  std::size_t n_hidden = 20;
  TrainConfig train = TrainConfig::standard_defaults();
  TrainConfig adversarial = TrainConfig::adversarial_defaults();
  AttackConfig attack = default_eval_attack();
  EpsilonReference epsilon_reference = EpsilonReference::DenseBatch;
  /// Explicit grid; when empty, density_count log-spaced points are used.
  std::vector<double> densities;
  std::size_t density_count = 30;
  double density_high = 1.0;
  double density_low = 0.1;
  std::size_t eval_batch_size = 4096;
  SaeRunConfig sae{};

  void validate() const;
  std::vector<double> density_grid() const;
  /// Sweep spec without the adversarial block unless `paired`.
  SweepSpec sweep_spec(bool paired) const;
};

RunConfig parse_config(std::string_view yaml_text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_yaml(const RunConfig& cfg);

/// Hex digest of the canonical YAML with `threads` left out.
std::string run_hash(const RunConfig& cfg);

std::string_view to_string(StandardizeMode mode);
StandardizeMode parse_standardize_mode(std::string_view s);

}  // namespace splab
