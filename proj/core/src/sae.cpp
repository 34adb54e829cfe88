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

#include "splab/sae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace splab {

namespace {

constexpr double kMinStd = 1e-12;

// Indices of the `k` largest strictly positive entries of `a`, ordered by
// (value desc, index asc). Fewer than k come back when fewer are positive.
void top_positive(std::span<const double> a, std::size_t k, std::span<const char> allowed,
                  std::vector<std::size_t>& idx, std::vector<std::size_t>& out) {
  idx.clear();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0.0 && (allowed.empty() || allowed[i])) idx.push_back(i);
  const auto before = [&](std::size_t x, std::size_t y) {
    return a[x] > a[y] || (a[x] == a[y] && x < y);
  };
  const std::size_t keep = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), before);
  out.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep));
}

// pre = W_enc (x − b_pre) + b_enc, into `pre`; `centred` receives x − b_pre.
void pre_activations(const SaeModel& sae, const double* x, std::vector<double>& centred,
                     std::vector<double>& pre) {
  const std::size_t d = sae.input_dim;
  for (std::size_t j = 0; j < d; ++j) centred[j] = x[j] - sae.b_pre[j];
  for (std::size_t i = 0; i < sae.dict_size; ++i) {
    const double* w = sae.W_enc.data() + i * d;
    double s = sae.b_enc[i];
    for (std::size_t j = 0; j < d; ++j) s += w[j] * centred[j];
    pre[i] = s;
  }
}

// Sparse code of x as (index, value) pairs.
void encode_sparse(const SaeModel& sae, const double* x, std::size_t k,
                   std::vector<double>& centred, std::vector<double>& pre,
                   std::vector<std::size_t>& scratch, std::vector<std::size_t>& active) {
  pre_activations(sae, x, centred, pre);
  if (sae.is_topk()) {
    top_positive(pre, k, {}, scratch, active);
  } else {
    active.clear();
    for (std::size_t i = 0; i < sae.dict_size; ++i)
      if (pre[i] > 0.0) active.push_back(i);
  }
}

std::size_t variant_k(const SaeModel& sae) {
  if (const auto* t = std::get_if<TopKParams>(&sae.variant)) return t->k;
  return sae.dict_size;
}

void check_finite_dataset(const Matrix& m) {
  if (!m.all_finite()) throw NumericError("activation dataset contains non-finite values");
}

}  // namespace

ActivationDataset collect_activations(const ToyModel& model, const Matrix& inputs,
                                      std::string provenance) {
  SPLAB_REQUIRE(inputs.cols() == model.n_features(), "collect_activations: width != n_features");
  ActivationDataset ds{Matrix(inputs.rows(), model.n_hidden()), std::nullopt, std::move(provenance)};
  const std::size_t n = model.n_features();
  const std::size_t m = model.n_hidden();
  for (std::size_t b = 0; b < inputs.rows(); ++b) {
    const double* x = inputs.data() + b * n;
    for (std::size_t k = 0; k < m; ++k) {
      const double* w = model.W.data() + k * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += w[j] * x[j];
      ds.data(b, k) = s;
    }
  }
  return ds;
}

ActivationDataset collect_activations(const ToyModel& model, const FeatureBatch& batch) {
  std::ostringstream tag;
  tag << "toy-hidden n_features=" << model.n_features() << " n_hidden=" << model.n_hidden()
      << " density=" << batch.density;
  return collect_activations(model, batch.data, tag.str());
}

ActivationDataset standardize(const ActivationDataset& ds, StandardizeMode mode) {
  SPLAB_REQUIRE(ds.n_samples() >= 2, "standardize: need at least 2 samples");
  check_finite_dataset(ds.data);
  const std::size_t n = ds.n_samples();
  const std::size_t d = ds.dim();
  Standardization stats{Vector(d), Vector(d, 1.0)};
  if (mode == StandardizeMode::PerDimension) {
    for (std::size_t j = 0; j < d; ++j) {
      double mu = 0.0;
      for (std::size_t i = 0; i < n; ++i) mu += ds.data(i, j);
      mu /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double c = ds.data(i, j) - mu;
        var += c * c;
      }
      const double sd = std::sqrt(var / static_cast<double>(n));
      stats.mean[j] = mu;
      stats.std[j] = sd < kMinStd ? 1.0 : sd;
    }
  } else {
    double mu = 0.0;
    for (double v : ds.data.span()) mu += v;
    mu /= static_cast<double>(ds.data.size());
    double var = 0.0;
    for (double v : ds.data.span()) var += (v - mu) * (v - mu);
    const double sd = std::sqrt(var / static_cast<double>(ds.data.size()));
    for (std::size_t j = 0; j < d; ++j) {
      stats.mean[j] = mu;
      stats.std[j] = sd < kMinStd ? 1.0 : sd;
    }
  }
  return apply_standardization(ds, stats);
}

ActivationDataset apply_standardization(const ActivationDataset& ds, const Standardization& stats) {
  SPLAB_REQUIRE(stats.mean.size() == ds.dim() && stats.std.size() == ds.dim(),
                "apply_standardization: statistics width != dataset dim");
  for (double s : stats.std) SPLAB_REQUIRE(s > 0.0, "apply_standardization: std must be > 0");
  ActivationDataset out{Matrix(ds.n_samples(), ds.dim()), stats, ds.provenance};
  for (std::size_t i = 0; i < ds.n_samples(); ++i)
    for (std::size_t j = 0; j < ds.dim(); ++j)
      out.data(i, j) = (ds.data(i, j) - stats.mean[j]) / stats.std[j];
  return out;
}

ActivationDataset destandardize(const ActivationDataset& ds) {
  SPLAB_REQUIRE(ds.standardization.has_value(), "destandardize: dataset carries no statistics");
  const auto& st = *ds.standardization;
  ActivationDataset out{Matrix(ds.n_samples(), ds.dim()), std::nullopt, ds.provenance};
  for (std::size_t i = 0; i < ds.n_samples(); ++i)
    for (std::size_t j = 0; j < ds.dim(); ++j)
      out.data(i, j) = ds.data(i, j) * st.std[j] + st.mean[j];
  return out;
}

SaeModel make_sae(std::size_t input_dim, std::size_t dict_size, SaeVariant variant) {
  SPLAB_REQUIRE(input_dim > 0, "sae: input_dim must be > 0");
  SPLAB_REQUIRE(dict_size >= input_dim, "sae: dict_size must be >= input_dim (expansion >= 1)");
  if (const auto* t = std::get_if<TopKParams>(&variant)) {
    SPLAB_REQUIRE(t->k > 0 && t->k < dict_size, "sae: TopK needs 0 < k < dict_size");
    SPLAB_REQUIRE(t->aux_weight >= 0.0, "sae: aux_weight must be >= 0");
  } else {
    SPLAB_REQUIRE(std::get<L1Params>(variant).lambda >= 0.0, "sae: L1 lambda must be >= 0");
  }
  SaeModel sae;
  sae.input_dim = input_dim;
  sae.dict_size = dict_size;
  sae.W_enc = Matrix(dict_size, input_dim);
  sae.b_enc = Vector(dict_size);
  sae.W_dec = Matrix(input_dim, dict_size);
  sae.b_pre = Vector(input_dim);
  sae.variant = variant;
  sae.dead_latent_counters.assign(dict_size, 0);
  return sae;
}

Vector sae_encode_topk(const SaeModel& sae, const Vector& x, std::size_t k) {
  SPLAB_REQUIRE(x.size() == sae.input_dim, "sae_encode: length != input_dim");
  std::vector<double> centred(sae.input_dim), pre(sae.dict_size);
  std::vector<std::size_t> scratch, active;
  pre_activations(sae, x.data(), centred, pre);
  top_positive(pre, k, {}, scratch, active);
  Vector z(sae.dict_size);
  for (std::size_t i : active) z[i] = pre[i];
  return z;
}

Vector sae_encode(const SaeModel& sae, const Vector& x) {
  SPLAB_REQUIRE(x.size() == sae.input_dim, "sae_encode: length != input_dim");
  std::vector<double> centred(sae.input_dim), pre(sae.dict_size);
  std::vector<std::size_t> scratch, active;
  encode_sparse(sae, x.data(), variant_k(sae), centred, pre, scratch, active);
  Vector z(sae.dict_size);
  for (std::size_t i : active) z[i] = pre[i];
  return z;
}

Vector sae_decode(const SaeModel& sae, const Vector& z) {
  SPLAB_REQUIRE(z.size() == sae.dict_size, "sae_decode: code length != dict_size");
  Vector out = sae.b_pre;
  for (std::size_t j = 0; j < sae.input_dim; ++j) {
    const double* w = sae.W_dec.data() + j * sae.dict_size;
    double s = 0.0;
    for (std::size_t i = 0; i < sae.dict_size; ++i) s += w[i] * z[i];
    out[j] += s;
  }
  return out;
}

SaeTrainConfig SaeTrainConfig::scaled_for(std::size_t input_dim) const {
  SaeTrainConfig out = *this;
  if (auto* t = std::get_if<TopKParams>(&out.variant))
    t->k_aux = std::min(t->k_aux, (expansion_factor * input_dim) / 2);
  return out;
}

void SaeTrainConfig::validate() const {
  SPLAB_REQUIRE(expansion_factor >= 1, "sae train: expansion_factor must be >= 1");
  SPLAB_REQUIRE(steps > 0, "sae train: steps must be > 0");
  SPLAB_REQUIRE(learning_rate > 0.0, "sae train: learning_rate must be > 0");
  SPLAB_REQUIRE(batch_size > 0, "sae train: batch_size must be > 0");
  SPLAB_REQUIRE(log_every > 0, "sae train: log_every must be > 0");
}

SaeModel train_sae(const ActivationDataset& ds, const SaeTrainConfig& cfg_in,
                   SaeTrainReport* report) {
  cfg_in.validate();
  SPLAB_REQUIRE(ds.standardization.has_value(), "train_sae: dataset must be standardized");
  SPLAB_REQUIRE(ds.n_samples() > 0, "train_sae: empty dataset");
  check_finite_dataset(ds.data);
  const SaeTrainConfig cfg = cfg_in.scaled_for(ds.dim());
  const std::size_t d = ds.dim();
  const std::size_t D = cfg.expansion_factor * d;
  SaeModel sae = make_sae(d, D, cfg.variant);
  const TopKParams* topk = std::get_if<TopKParams>(&cfg.variant);
  const double l1 = topk ? 0.0 : std::get<L1Params>(cfg.variant).lambda;
  const std::size_t k = topk ? topk->k : D;

  // Decoder kept as rows (dict × input) during training; W_dec = Dtᵀ at the end.
  const Rng root(cfg.seed);
  Matrix Dt(D, d);
  {
    Rng init = root.substream(0);
    for (std::size_t i = 0; i < D; ++i) {
      auto row = Dt.row(i);
      for (auto& v : row) v = init.gaussian();
      const double nrm = norm2(row);
      for (auto& v : row) v /= nrm;
    }
  }
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < d; ++j) sae.W_enc(i, j) = Dt(i, j);
  for (std::size_t j = 0; j < d; ++j) {
    double mu = 0.0;
    for (std::size_t s = 0; s < ds.n_samples(); ++s) mu += ds.data(s, j);
    sae.b_pre[j] = mu / static_cast<double>(ds.n_samples());
  }

  Optimizer opt(OptimizerKind::Adam, cfg.learning_rate, cfg.adam, {D * d, D, D * d, d});
  Matrix gEnc(D, d), gDt(D, d);
  Vector gbEnc(D), gbPre(d);
  std::vector<double> centred(d), pre(D), xhat(d), dxhat(d), dz(D), eaux(d), daux(d);
  std::vector<std::size_t> scratch, active, aux_active;
  std::vector<char> dead(D, 0), fired(D, 0);
  const Rng batch_root = root.substream(1);
  const double B = static_cast<double>(cfg.batch_size);
  const double mse_scale = 2.0 / (B * static_cast<double>(d));
  double last_mse = 0.0;

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    Rng brng = batch_root.substream(step);
    std::fill(gEnc.span().begin(), gEnc.span().end(), 0.0);
    std::fill(gDt.span().begin(), gDt.span().end(), 0.0);
    std::fill(gbEnc.begin(), gbEnc.end(), 0.0);
    std::fill(gbPre.begin(), gbPre.end(), 0.0);
    std::fill(fired.begin(), fired.end(), 0);
    std::size_t n_dead = 0;
    if (topk) {
      for (std::size_t i = 0; i < D; ++i) {
        dead[i] = sae.dead_latent_counters[i] >= cfg.dead_after ? 1 : 0;
        n_dead += static_cast<std::size_t>(dead[i]);
      }
    }

    double mse_sum = 0.0, aux_sum = 0.0, l1_sum = 0.0;
    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      const double* x = ds.data.data() + brng.below(ds.n_samples()) * d;
      encode_sparse(sae, x, k, centred, pre, scratch, active);
      std::copy(sae.b_pre.begin(), sae.b_pre.end(), xhat.begin());
      for (std::size_t i : active) {
        fired[i] = 1;
        const double zi = pre[i];
        const double* di = Dt.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) xhat[j] += zi * di[j];
      }
      for (std::size_t j = 0; j < d; ++j) {
        const double e = xhat[j] - x[j];
        mse_sum += e * e;
        dxhat[j] = mse_scale * e;
      }
      // Auxiliary reconstruction of the residual x − x̂ from dead latents.
      aux_active.clear();
      if (topk && n_dead > 0 && topk->aux_weight > 0.0) {
        top_positive(pre, topk->k_aux, dead, scratch, aux_active);
        std::fill(eaux.begin(), eaux.end(), 0.0);
        for (std::size_t i : aux_active) {
          const double* di = Dt.data() + i * d;
          for (std::size_t j = 0; j < d; ++j) eaux[j] += pre[i] * di[j];
        }
        for (std::size_t j = 0; j < d; ++j) {
          const double e = eaux[j] - (x[j] - xhat[j]);
          aux_sum += e * e;
          daux[j] = topk->aux_weight * mse_scale * e;
        }
      }
      // Backward. dz_i = Dt[i]·dx̂ (+ λ/B for L1) on active latents.
      for (std::size_t i : active) {
        const double* di = Dt.data() + i * d;
        double* gdi = gDt.data() + i * d;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          s += di[j] * dxhat[j];
          gdi[j] += pre[i] * dxhat[j];
        }
        if (l1 > 0.0) {
          s += l1 / B;
          l1_sum += pre[i];
        }
        dz[i] = s;
      }
      for (std::size_t i : aux_active) {
        const double* di = Dt.data() + i * d;
        double* gdi = gDt.data() + i * d;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          s += di[j] * daux[j];
          gdi[j] += pre[i] * daux[j];
        }
        // A dead latent may still fire in this batch and sit in both sets.
        if (std::find(active.begin(), active.end(), i) != active.end()) {
          dz[i] += s;
        } else {
          active.push_back(i);
          dz[i] = s;
        }
      }
      for (std::size_t j = 0; j < d; ++j) gbPre[j] += dxhat[j];
      for (std::size_t i : active) {
        const double g = dz[i];
        gbEnc[i] += g;
        double* ge = gEnc.data() + i * d;
        const double* we = sae.W_enc.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) {
          ge[j] += g * centred[j];
          gbPre[j] -= g * we[j];
        }
      }
    }

    const double mse = mse_sum / (B * static_cast<double>(d));
    const double total = mse + (topk ? topk->aux_weight * aux_sum / (B * static_cast<double>(d))
                                     : l1 * l1_sum / B);
    if (!std::isfinite(total)) throw DivergenceError("train_sae: loss is not finite", step);
    last_mse = mse;

    opt.begin_step();
    opt.update(0, sae.W_enc.span(), gEnc.span());
    opt.update(1, sae.b_enc.span(), gbEnc.span());
    opt.update(2, Dt.span(), gDt.span());
    opt.update(3, sae.b_pre.span(), gbPre.span());
    if (!topk) {
      for (std::size_t i = 0; i < D; ++i) {
        auto row = Dt.row(i);
        const double nrm = norm2(row);
        if (nrm > 0.0)
          for (auto& v : row) v /= nrm;
      }
    }
    for (std::size_t i = 0; i < D; ++i)
      sae.dead_latent_counters[i] = fired[i] ? 0 : sae.dead_latent_counters[i] + 1;

    if (report && (step % cfg.log_every == 0 || step + 1 == cfg.steps))
      report->loss_curve.push_back({step, mse, total, n_dead});
  }
  sae.W_dec = Dt.transposed();
  if (!sae.W_enc.all_finite() || !sae.W_dec.all_finite() || !sae.b_enc.all_finite() ||
      !sae.b_pre.all_finite())
    throw DivergenceError("train_sae: parameters are not finite", cfg.steps);
  if (report) report->final_mse = last_mse;
  return sae;
}

SaeEvalReport eval_sae(const SaeModel& sae, const ActivationDataset& ds) {
  SPLAB_REQUIRE(ds.dim() == sae.input_dim, "eval_sae: dataset dim != SAE input_dim");
  SPLAB_REQUIRE(ds.n_samples() > 0, "eval_sae: empty dataset");
  const std::size_t d = sae.input_dim;
  std::vector<double> centred(d), pre(sae.dict_size), xhat(d);
  std::vector<std::size_t> scratch, active;
  std::vector<char> ever(sae.dict_size, 0);
  SaeEvalReport rep;
  rep.per_sample_l0.reserve(ds.n_samples());
  double sq = 0.0;
  double l0 = 0.0;
  const std::size_t k = variant_k(sae);
  for (std::size_t s = 0; s < ds.n_samples(); ++s) {
    const double* x = ds.data.data() + s * d;
    encode_sparse(sae, x, k, centred, pre, scratch, active);
    std::copy(sae.b_pre.begin(), sae.b_pre.end(), xhat.begin());
    for (std::size_t i : active) {
      ever[i] = 1;
      for (std::size_t j = 0; j < d; ++j) xhat[j] += sae.W_dec(j, i) * pre[i];
    }
    for (std::size_t j = 0; j < d; ++j) sq += (xhat[j] - x[j]) * (xhat[j] - x[j]);
    rep.per_sample_l0.push_back(active.size());
    l0 += static_cast<double>(active.size());
  }
  const double n = static_cast<double>(ds.n_samples());
  rep.mse = sq / (n * static_cast<double>(d));
  rep.mean_l0 = l0 / n;
  rep.dead_fraction =
      static_cast<double>(std::count(ever.begin(), ever.end(), 0)) / static_cast<double>(sae.dict_size);
  return rep;
}

double l0_ratio(const SaeModel& sae, const ActivationDataset& clean,
                const ActivationDataset& adversarial) {
  SPLAB_REQUIRE(clean.dim() == adversarial.dim(), "l0_ratio: dataset dims differ");
  SPLAB_REQUIRE(clean.standardization.has_value() && adversarial.standardization.has_value() &&
                    *clean.standardization == *adversarial.standardization,
                "l0_ratio: both datasets must carry the same standardization statistics");
  const double clean_l0 = eval_sae(sae, clean).mean_l0;
  if (clean_l0 == 0.0) throw DegenerateBaselineError("l0_ratio: clean mean L0 is zero");
  return eval_sae(sae, adversarial).mean_l0 / clean_l0;
}

}  // namespace splab
