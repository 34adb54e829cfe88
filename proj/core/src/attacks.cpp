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

#include "splab/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace splab {

std::string_view to_string(AttackVariant v) {
  switch (v) {
    case AttackVariant::GradientOneStep: return "gradient";
    case AttackVariant::ElhageAnalytic: return "elhage";
    case AttackVariant::RandomBaseline: return "random";
  }
  return "?";
}

std::string_view to_string(EpsilonScope s) {
  return s == EpsilonScope::MeanInputNorm ? "mean-norm" : "per-example";
}

std::string_view to_string(VulnerabilityStat s) {
  switch (s) {
    case VulnerabilityStat::AdversarialLoss: return "adversarial";
    case VulnerabilityStat::ExcessLoss: return "excess";
    case VulnerabilityStat::LossRatio: return "ratio";
  }
  return "?";
}

AttackVariant parse_attack_variant(std::string_view s) {
  if (s == "gradient") return AttackVariant::GradientOneStep;
  if (s == "elhage") return AttackVariant::ElhageAnalytic;
  if (s == "random") return AttackVariant::RandomBaseline;
  throw ContractError("unknown attack variant '" + std::string(s) +
                      "' (expected gradient|elhage|random)");
}

EpsilonScope parse_epsilon_scope(std::string_view s) {
  if (s == "mean-norm") return EpsilonScope::MeanInputNorm;
  if (s == "per-example") return EpsilonScope::PerExampleNorm;
  throw ContractError("unknown epsilon scope '" + std::string(s) +
                      "' (expected mean-norm|per-example)");
}

VulnerabilityStat parse_vulnerability_stat(std::string_view s) {
  if (s == "adversarial") return VulnerabilityStat::AdversarialLoss;
  if (s == "excess") return VulnerabilityStat::ExcessLoss;
  if (s == "ratio") return VulnerabilityStat::LossRatio;
  throw ContractError("unknown vulnerability statistic '" + std::string(s) +
                      "' (expected adversarial|excess|ratio)");
}

void AttackConfig::validate() const {
  SPLAB_REQUIRE(epsilon_fraction >= 0.0 && std::isfinite(epsilon_fraction),
                "attack: epsilon_fraction must be >= 0");
  SPLAB_REQUIRE(noise_scale >= 0.0 && std::isfinite(noise_scale),
                "attack: noise_scale must be >= 0");
}

double resolve_epsilon(const Matrix& sample, double epsilon_fraction) {
  SPLAB_REQUIRE(sample.rows() > 0, "resolve_epsilon: empty sample");
  double total = 0.0;
  for (std::size_t i = 0; i < sample.rows(); ++i) total += norm2(sample.row(i));
  return epsilon_fraction * total / static_cast<double>(sample.rows());
}

double resolve_epsilon(const FeatureBatch& sample, double epsilon_fraction) {
  return resolve_epsilon(sample.data, epsilon_fraction);
}

Vector gradient_l2_attack(const ToyModel& model, const Vector& x, double epsilon,
                          double noise_scale, Rng& rng) {
  SPLAB_REQUIRE(epsilon >= 0.0, "gradient_l2_attack: epsilon must be >= 0");
  if (epsilon == 0.0) return x;
  Vector probe = x;
  const double sigma = noise_scale * norm2(x.span());
  if (sigma > 0.0)
    for (auto& v : probe) v += sigma * rng.gaussian();
  const Vector g = grad_input(model, probe);
  const double gn = norm2(g.span());
  if (gn == 0.0 || !std::isfinite(gn)) return x;
  Vector out = x;
  const double step = epsilon / gn;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += step * g[i];
  return out;
}

ElhageDirections::ElhageDirections(const ToyModel& model)
    : unit_rows(gram(model.W)), usable(model.n_features(), 0) {
  for (std::size_t i = 0; i < unit_rows.rows(); ++i) {
    auto row = unit_rows.row(i);
    const double nrm = norm2(row);
    if (nrm == 0.0) continue;
    usable[i] = 1;
    for (auto& v : row) v /= nrm;
  }
}

Vector elhage_analytic_attack(const ToyModel& model, const ElhageDirections& dirs,
                              const Vector& x, double epsilon) {
  SPLAB_REQUIRE(epsilon >= 0.0, "elhage_analytic_attack: epsilon must be >= 0");
  SPLAB_REQUIRE(x.size() == model.n_features(), "elhage_analytic_attack: length mismatch");
  if (epsilon == 0.0) return x;
  Vector best = x;
  double best_loss = -1.0;
  Vector cand(x.size());
  for (std::size_t i = 0; i < dirs.unit_rows.rows(); ++i) {
    if (!dirs.usable[i]) continue;
    auto d = dirs.unit_rows.row(i);
    for (const double sign : {1.0, -1.0}) {
      for (std::size_t j = 0; j < x.size(); ++j) cand[j] = x[j] + sign * epsilon * d[j];
      const double l = example_loss(model, cand);
      if (l > best_loss) {
        best_loss = l;
        best = cand;
      }
    }
  }
  return best;
}

Vector elhage_analytic_attack(const ToyModel& model, const Vector& x, double epsilon) {
  return elhage_analytic_attack(model, ElhageDirections(model), x, epsilon);
}

Vector random_baseline_attack(const Vector& x, double epsilon, Rng& rng) {
  SPLAB_REQUIRE(epsilon >= 0.0, "random_baseline_attack: epsilon must be >= 0");
  if (epsilon == 0.0) return x;
  const Vector u = rng.unit_sphere(x.size());
  Vector out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += epsilon * u[i];
  return out;
}

namespace {

AttackOutcome run_attack(const ToyModel& model, const FeatureBatch& batch,
                         const AttackConfig& cfg, double mean_epsilon, bool per_example,
                         const Rng& rng) {
  cfg.validate();
  SPLAB_REQUIRE(batch.batch_size() > 0, "attack: empty batch");
  SPLAB_REQUIRE(batch.n_features() == model.n_features(), "attack: batch width != n_features");

  const std::size_t B = batch.batch_size();
  const std::size_t n = batch.n_features();
  AttackOutcome out;
  out.x_adv = FeatureBatch{Matrix(B, n), batch.density};
  out.perturbation_norms = Vector(B);

  std::optional<ElhageDirections> dirs;
  if (cfg.variant == AttackVariant::ElhageAnalytic) dirs.emplace(model);

  double clean_total = 0.0;
  double adv_total = 0.0;
  double eps_total = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    const Vector x = batch.example(i);
    const double eps = per_example ? cfg.epsilon_fraction * norm2(x.span()) : mean_epsilon;
    Rng local = rng.substream(i);
    Vector adv;
    switch (cfg.variant) {
      case AttackVariant::GradientOneStep:
        adv = gradient_l2_attack(model, x, eps, cfg.noise_scale, local);
        break;
      case AttackVariant::ElhageAnalytic:
        adv = elhage_analytic_attack(model, *dirs, x, eps);
        break;
      case AttackVariant::RandomBaseline:
        adv = random_baseline_attack(x, eps, local);
        break;
    }
    const double clean = example_loss(model, x);
    const double attacked = example_loss(model, adv);
    if (cfg.variant == AttackVariant::GradientOneStep && eps > 0.0) {
      Rng control = rng.substream(i).substream(0x5A17);
      const double random_loss = example_loss(model, random_baseline_attack(x, eps, control));
      if (attacked < clean || attacked < random_loss) ++out.masking_failures;
    }
    double d2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = adv[j] - x[j];
      d2 += d * d;
      out.x_adv.data(i, j) = adv[j];
    }
    out.perturbation_norms[i] = std::sqrt(d2);
    clean_total += clean;
    adv_total += attacked;
    eps_total += eps;
  }
  out.clean_loss = clean_total / static_cast<double>(B);
  out.adv_loss = adv_total / static_cast<double>(B);
  out.epsilon = eps_total / static_cast<double>(B);
  return out;
}

}  // namespace

AttackOutcome attack_batch(const ToyModel& model, const FeatureBatch& batch,
                           const AttackConfig& cfg, const Rng& rng) {
  if (cfg.scope == EpsilonScope::PerExampleNorm) return run_attack(model, batch, cfg, 0.0, true, rng);
  SPLAB_REQUIRE(batch.batch_size() > 0, "attack: empty batch");
  return run_attack(model, batch, cfg, resolve_epsilon(batch, cfg.epsilon_fraction), false, rng);
}

AttackOutcome attack_batch_with_epsilon(const ToyModel& model, const FeatureBatch& batch,
                                        const AttackConfig& cfg, double epsilon,
                                        const Rng& rng) {
  SPLAB_REQUIRE(epsilon >= 0.0, "attack: epsilon must be >= 0");
  return run_attack(model, batch, cfg, epsilon, false, rng);
}

Matrix perturb_inputs(const ToyModel& model, const Matrix& inputs, const AttackConfig& cfg,
                      const Rng& rng) {
  SPLAB_REQUIRE(inputs.rows() > 0, "perturb_inputs: empty batch");
  SPLAB_REQUIRE(inputs.cols() == model.n_features(), "perturb_inputs: width != n_features");
  const bool per_example = cfg.scope == EpsilonScope::PerExampleNorm;
  const double mean_eps = per_example ? 0.0 : resolve_epsilon(inputs, cfg.epsilon_fraction);
  std::optional<ElhageDirections> dirs;
  if (cfg.variant == AttackVariant::ElhageAnalytic) dirs.emplace(model);

  Matrix out(inputs.rows(), inputs.cols());
  for (std::size_t i = 0; i < inputs.rows(); ++i) {
    auto r = inputs.row(i);
    const Vector x(std::vector<double>(r.begin(), r.end()));
    const double eps = per_example ? cfg.epsilon_fraction * norm2(x.span()) : mean_eps;
    Rng local = rng.substream(i);
    Vector adv;
    switch (cfg.variant) {
      case AttackVariant::GradientOneStep:
        adv = gradient_l2_attack(model, x, eps, cfg.noise_scale, local);
        break;
      case AttackVariant::ElhageAnalytic:
        adv = elhage_analytic_attack(model, *dirs, x, eps);
        break;
      case AttackVariant::RandomBaseline:
        adv = random_baseline_attack(x, eps, local);
        break;
    }
    std::copy(adv.begin(), adv.end(), out.row(i).begin());
  }
  return out;
}

double vulnerability_of(const AttackOutcome& outcome, VulnerabilityStat statistic) {
  switch (statistic) {
    case VulnerabilityStat::AdversarialLoss:
      return outcome.adv_loss;
    case VulnerabilityStat::ExcessLoss:
      return outcome.adv_loss - outcome.clean_loss;
    case VulnerabilityStat::LossRatio:
      if (!(outcome.clean_loss > 0.0))
        throw DegenerateBaselineError("loss ratio undefined: clean loss is 0");
      return outcome.adv_loss / outcome.clean_loss;
  }
  return outcome.adv_loss;
}

double vulnerability(const ToyModel& model, const FeatureBatch& eval_batch,
                     const AttackConfig& cfg, const Rng& rng) {
  return vulnerability_of(attack_batch(model, eval_batch, cfg, rng), cfg.statistic);
}

double relative_vulnerability(double model_vuln, double dense_baseline_vuln) {
  if (!(dense_baseline_vuln > 0.0))
    throw DegenerateBaselineError("relative_vulnerability: baseline vulnerability must be > 0");
  return model_vuln / dense_baseline_vuln;
}

}  // namespace splab
