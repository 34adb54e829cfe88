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

// Sparse autoencoders over activation datasets.
//
//   encode:  pre = W_enc (x − b_pre) + b_enc,  a = ReLU(pre)
//            TopK keeps the k largest entries of a (ties: lowest index),
//            L1 keeps all of a.
//   decode:  x̂ = W_dec z + b_pre
//
// TopK objective: MSE + aux_weight · MSE(W_dec z_aux, x − x̂), where z_aux
// keeps the top-k_aux activations among dead latents and the residual
// x − x̂ is held constant. L1 objective: MSE + λ · mean ‖z‖₁, decoder
// columns renormalised to unit norm after every step.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "splab/numkit.hpp"
#include "splab/optim.hpp"
#include "splab/toymodel.hpp"

namespace splab {

struct Standardization {
  Vector mean;
  Vector std;  // entries > 0
  friend bool operator==(const Standardization&, const Standardization&) = default;
};

struct ActivationDataset {
  Matrix data;  // n_samples × dim
  std::optional<Standardization> standardization;
  std::string provenance;

  std::size_t n_samples() const noexcept { return data.rows(); }
  std::size_t dim() const noexcept { return data.cols(); }
};

enum class StandardizeMode { PerDimension, GlobalScalar };

/// Hidden activations h = W x, one row per batch example.
ActivationDataset collect_activations(const ToyModel& model, const FeatureBatch& batch);
/// Same for arbitrary inputs (adversarial copies, say).
ActivationDataset collect_activations(const ToyModel& model, const Matrix& inputs,
                                      std::string provenance);

/// Zero mean, unit (population) variance. Dimensions whose std is below 1e-12
/// are centred and keep std = 1. GlobalScalar uses one mean and one std for
/// all dimensions (stored broadcast per dimension). Needs ≥ 2 samples.
ActivationDataset standardize(const ActivationDataset& ds,
                              StandardizeMode mode = StandardizeMode::PerDimension);

/// Applies existing statistics (e.g. from the clean set to an adversarial set).
ActivationDataset apply_standardization(const ActivationDataset& ds, const Standardization& stats);

/// Inverse of standardize; result carries no statistics.
ActivationDataset destandardize(const ActivationDataset& ds);

struct TopKParams {
  std::size_t k = 8;
  std::size_t k_aux = 512;
  double aux_weight = 1.0;
  friend bool operator==(const TopKParams&, const TopKParams&) = default;
};

struct L1Params {
  double lambda = 3e-4;
  friend bool operator==(const L1Params&, const L1Params&) = default;
};

using SaeVariant = std::variant<TopKParams, L1Params>;

struct SaeModel {
  std::size_t input_dim = 0;
  std::size_t dict_size = 0;
  Matrix W_enc;  // dict_size × input_dim
  Vector b_enc;  // dict_size
  Matrix W_dec;  // input_dim × dict_size
  Vector b_pre;  // input_dim
  SaeVariant variant = TopKParams{};
  /// Training batches since each latent last fired.
  std::vector<std::uint64_t> dead_latent_counters;

  bool is_topk() const noexcept { return std::holds_alternative<TopKParams>(variant); }
  friend bool operator==(const SaeModel&, const SaeModel&) = default;
};

/// Allocates zeroed parameters; checks expansion ≥ 1 and k < dict_size.
SaeModel make_sae(std::size_t input_dim, std::size_t dict_size, SaeVariant variant);

Vector sae_encode(const SaeModel& sae, const Vector& x);
/// TopK encode with an explicit k (ignores the model's own k). k ≥ dict_size
/// keeps every positive activation.
Vector sae_encode_topk(const SaeModel& sae, const Vector& x, std::size_t k);
Vector sae_decode(const SaeModel& sae, const Vector& z);

struct SaeTrainConfig {
  SaeVariant variant = TopKParams{};
  std::size_t expansion_factor = 8;
  std::size_t steps = 50000;
  double learning_rate = 5e-4;
  std::size_t batch_size = 4096;
  std::uint64_t seed = 0;
  /// A latent is dead after this many consecutive batches without firing.
  std::size_t dead_after = 1000;
  AdamParams adam{};
  std::size_t log_every = 1000;

  /// k_aux = min(k_aux, dict_size / 2) for the given input width.
  SaeTrainConfig scaled_for(std::size_t input_dim) const;
  void validate() const;
};

struct SaeLossPoint {
  std::size_t step = 0;
  double mse = 0.0;
  double total = 0.0;
  std::size_t dead_latents = 0;
};

struct SaeTrainReport {
  std::vector<SaeLossPoint> loss_curve;
  double final_mse = 0.0;
};

/// Trains on a standardized dataset (ContractError otherwise). Batches are
/// drawn with replacement; step t uses Rng(seed).substream(t).
SaeModel train_sae(const ActivationDataset& ds, const SaeTrainConfig& cfg,
                   SaeTrainReport* report = nullptr);

struct SaeEvalReport {
  double mse = 0.0;
  double mean_l0 = 0.0;
  double dead_fraction = 0.0;  // latents that never fire on the eval set
  std::vector<std::size_t> per_sample_l0;
};

/// ContractError when ds.dim() != sae.input_dim.
SaeEvalReport eval_sae(const SaeModel& sae, const ActivationDataset& ds);

/// mean_l0(adversarial) / mean_l0(clean). Both datasets must carry identical
/// standardization statistics. DegenerateBaselineError if clean L0 is 0.
double l0_ratio(const SaeModel& sae, const ActivationDataset& clean,
                const ActivationDataset& adversarial);

}  // namespace splab
