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

// L2-bounded attacks on the toy model.
//
// Three variants share one contract: the returned point lies on (or inside,
// when the attack gives up) the sphere of radius epsilon around x. Inputs are
// never clipped back to [0, 1]^n.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "splab/numkit.hpp"
#include "splab/toymodel.hpp"

namespace splab {

enum class AttackVariant { GradientOneStep, ElhageAnalytic, RandomBaseline };

/// How epsilon_fraction is turned into a radius.
///   MeanInputNorm:  eps = fraction · mean ‖x‖₂ over the batch (evaluation).
///   PerExampleNorm: eps = fraction · ‖x‖₂ for each example (training).
enum class EpsilonScope { MeanInputNorm, PerExampleNorm };

/// Statistic reported by vulnerability().
///   AdversarialLoss: mean adversarial loss.
///   ExcessLoss:      mean adversarial loss minus mean clean loss.
///   LossRatio:       mean adversarial loss over mean clean loss.
enum class VulnerabilityStat { AdversarialLoss, ExcessLoss, LossRatio };

std::string_view to_string(AttackVariant v);
std::string_view to_string(EpsilonScope s);
std::string_view to_string(VulnerabilityStat s);
AttackVariant parse_attack_variant(std::string_view s);
EpsilonScope parse_epsilon_scope(std::string_view s);
VulnerabilityStat parse_vulnerability_stat(std::string_view s);

struct AttackConfig {
  double epsilon_fraction = 0.10;
  double noise_scale = 1e-3;  // relative to ‖x‖₂
  AttackVariant variant = AttackVariant::GradientOneStep;
  EpsilonScope scope = EpsilonScope::MeanInputNorm;
  VulnerabilityStat statistic = VulnerabilityStat::AdversarialLoss;

  void validate() const;
  friend bool operator==(const AttackConfig&, const AttackConfig&) = default;
};

struct AttackOutcome {
  FeatureBatch x_adv;
  Vector perturbation_norms;
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  double epsilon = 0.0;  // radius used (mean radius under PerExampleNorm)
  /// Gradient variant only: examples where the returned point lost to the
  /// unperturbed input or to a random direction of the same radius.
  std::size_t masking_failures = 0;
};

/// fraction · mean over rows of ‖x‖₂.
double resolve_epsilon(const Matrix& sample, double epsilon_fraction);
double resolve_epsilon(const FeatureBatch& sample, double epsilon_fraction);

/// One-step L2 attack: g = ∇ₓ loss at x + N(0, (noise_scale ‖x‖₂)²), then
/// x + ε g / ‖g‖₂. Returns x unchanged when g = 0 or ε = 0.
Vector gradient_l2_attack(const ToyModel& model, const Vector& x, double epsilon,
                          double noise_scale, Rng& rng);

/// Unit-normalised rows of WᵀW, one candidate direction per output feature.
/// Zero rows are flagged and skipped.
struct ElhageDirections {
  Matrix unit_rows;
  std::vector<char> usable;

  explicit ElhageDirections(const ToyModel& model);
};

/// Evaluates x ± ε·dᵢ for every feature i with a nonzero interference row and
/// returns the candidate with the largest per-example loss. Ties keep the
/// lowest feature index, "+" before "−". Returns x when every row is zero.
Vector elhage_analytic_attack(const ToyModel& model, const Vector& x, double epsilon);
Vector elhage_analytic_attack(const ToyModel& model, const ElhageDirections& dirs,
                              const Vector& x, double epsilon);

/// x + ε u with u uniform on the unit sphere.
Vector random_baseline_attack(const Vector& x, double epsilon, Rng& rng);

/// Attacks every example of the batch with the configured variant. Example i
/// uses rng.substream(i), so results do not depend on evaluation order.
AttackOutcome attack_batch(const ToyModel& model, const FeatureBatch& batch,
                           const AttackConfig& cfg, const Rng& rng);

/// Same as attack_batch but with the radius fixed by the caller (the
/// MeanInputNorm radius of a reference sample, say).
AttackOutcome attack_batch_with_epsilon(const ToyModel& model, const FeatureBatch& batch,
                                        const AttackConfig& cfg, double epsilon,
                                        const Rng& rng);

/// Adversarial copy of `inputs` only (no loss bookkeeping); used inside
/// training loops. Radius follows cfg.scope, example i uses rng.substream(i).
Matrix perturb_inputs(const ToyModel& model, const Matrix& inputs, const AttackConfig& cfg,
                      const Rng& rng);

/// Vulnerability statistic of an outcome. LossRatio throws
/// DegenerateBaselineError when the clean loss is 0.
double vulnerability_of(const AttackOutcome& outcome, VulnerabilityStat statistic);

/// attack_batch followed by vulnerability_of.
double vulnerability(const ToyModel& model, const FeatureBatch& eval_batch,
                     const AttackConfig& cfg, const Rng& rng);

/// model_vuln / dense_baseline_vuln. Throws DegenerateBaselineError when the
/// baseline is not positive.
double relative_vulnerability(double model_vuln, double dense_baseline_vuln);

}  // namespace splab
