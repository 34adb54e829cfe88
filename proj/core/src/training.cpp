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

#include "splab/training.hpp"

#include <cmath>

namespace splab {

TrainConfig TrainConfig::standard_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::adversarial_defaults() {
  TrainConfig cfg;
  cfg.steps = 150000;
  cfg.alpha = 0.5;
  AttackConfig attack;
  attack.scope = EpsilonScope::PerExampleNorm;
  cfg.attack = attack;
  return cfg;
}

void TrainConfig::validate() const {
  SPLAB_REQUIRE(steps > 0, "train: steps must be > 0");
  SPLAB_REQUIRE(learning_rate > 0.0 && std::isfinite(learning_rate),
                "train: learning_rate must be > 0");
  SPLAB_REQUIRE(batch_size > 0, "train: batch_size must be > 0");
  SPLAB_REQUIRE(alpha >= 0.0 && alpha <= 1.0, "train: alpha must be in [0, 1]");
  SPLAB_REQUIRE(init_stddev >= 0.0, "train: init_stddev must be >= 0");
  SPLAB_REQUIRE(log_every > 0, "train: log_every must be > 0");
  if (attack) attack->validate();
}

namespace {

std::pair<ToyModel, TrainReport> run(const TrainConfig& cfg, std::size_t n_features,
                                     std::size_t n_hidden, double density, const Rng& root,
                                     bool adversarial, const ProgressHook& progress) {
  cfg.validate();
  SPLAB_REQUIRE(n_features > 0 && n_hidden > 0, "train: model dimensions must be > 0");
  SPLAB_REQUIRE(density > 0.0 && density <= 1.0, "train: density must be in (0, 1]");
  if (adversarial) SPLAB_REQUIRE(cfg.attack.has_value(), "train_adversarial: attack config required");

  const double stddev =
      cfg.init_stddev > 0.0 ? cfg.init_stddev : 1.0 / std::sqrt(static_cast<double>(n_hidden));
  Rng init = root.substream(kInitStream);
  ToyModel model = ToyModel::random_init(n_features, n_hidden, init, stddev);

  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.adam, {model.W.size(), model.b.size()});
  const Rng batch_root = root.substream(kBatchStream);
  const Rng attack_root = root.substream(kAttackStream);

  TrainReport report;
  const double alpha = adversarial ? cfg.alpha : 1.0;
  std::vector<double> gW(model.W.size());
  std::vector<double> gb(model.b.size());

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Rng batch_rng = batch_root.substream(step);
    const FeatureBatch batch = sample_batch(batch_rng, cfg.batch_size, n_features, density);
    const bool sample_point = step % cfg.log_every == 0 || step + 1 == cfg.steps;

    double clean_loss = 0.0;
    std::optional<double> adv_loss;
    ModelGradients clean = grad_params(model, batch.data, &clean_loss);
    if (!std::isfinite(clean_loss)) throw DivergenceError("train: clean loss is not finite", step);

    if (adversarial && alpha < 1.0) {
      const Matrix x_adv = perturb_inputs(model, batch.data, *cfg.attack, attack_root.substream(step));
      double l = 0.0;
      ModelGradients adv = grad_params(model, x_adv, &l);
      if (!std::isfinite(l)) throw DivergenceError("train: adversarial loss is not finite", step);
      adv_loss = l;
      const double beta = 1.0 - alpha;
      for (std::size_t i = 0; i < gW.size(); ++i)
        gW[i] = alpha * clean.dW.data()[i] + beta * adv.dW.data()[i];
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] = alpha * clean.db[i] + beta * adv.db[i];
    } else {
      std::copy(clean.dW.span().begin(), clean.dW.span().end(), gW.begin());
      std::copy(clean.db.begin(), clean.db.end(), gb.begin());
      if (adversarial && sample_point) {
        const Matrix x_adv =
            perturb_inputs(model, batch.data, *cfg.attack, attack_root.substream(step));
        adv_loss = loss(model, x_adv);
      }
    }

    if (sample_point) {
      LossPoint point{step, clean_loss, adv_loss};
      report.loss_curve.push_back(point);
      if (progress) progress(point);
    }
    report.final_clean_loss = clean_loss;
    if (adversarial) report.final_adv_loss = adv_loss ? adv_loss : report.final_adv_loss;

    opt.begin_step();
    opt.update(0, model.W.span(), gW);
    opt.update(1, model.b.span(), gb);
    report.wall_steps = step + 1;
  }
  if (!all_finite(model)) throw DivergenceError("train: parameters are not finite", cfg.steps);
  return {std::move(model), std::move(report)};
}

}  // namespace

std::pair<ToyModel, TrainReport> train_standard(const TrainConfig& cfg, std::size_t n_features,
                                                std::size_t n_hidden, double density,
                                                const Rng& rng, const ProgressHook& progress) {
  return run(cfg, n_features, n_hidden, density, rng, false, progress);
}

std::pair<ToyModel, TrainReport> train_standard(const TrainConfig& cfg, std::size_t n_features,
                                                std::size_t n_hidden, double density,
                                                const ProgressHook& progress) {
  return run(cfg, n_features, n_hidden, density, Rng(cfg.seed), false, progress);
}

std::pair<ToyModel, TrainReport> train_adversarial(const TrainConfig& cfg,
                                                   std::size_t n_features, std::size_t n_hidden,
                                                   double density, const Rng& rng,
                                                   const ProgressHook& progress) {
  return run(cfg, n_features, n_hidden, density, rng, true, progress);
}

std::pair<ToyModel, TrainReport> train_adversarial(const TrainConfig& cfg,
                                                   std::size_t n_features, std::size_t n_hidden,
                                                   double density, const ProgressHook& progress) {
  return run(cfg, n_features, n_hidden, density, Rng(cfg.seed), true, progress);
}

}  // namespace splab
