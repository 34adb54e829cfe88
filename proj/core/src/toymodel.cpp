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

#include "splab/toymodel.hpp"

#include <algorithm>
#include <vector>

namespace splab {

namespace {

void check_model_input(const ToyModel& model, std::size_t len) {
  SPLAB_REQUIRE(len == model.n_features(), "toy model: input length != n_features");
}

}  // namespace

struct ToyEvaluator::Scratch {
  std::vector<double> h, z, g, u;
  std::vector<std::size_t> support, open;
  Scratch(std::size_t n, std::size_t m) : h(m), z(n), g(n), u(m) {
    support.reserve(n);
    open.reserve(n);
  }
};

ToyEvaluator::ToyEvaluator(const ToyModel& model) : model_(model), Wt_(model.W.transposed()) {}

// h = W x over the nonzero inputs, z = Wᵀ h + b.
void ToyEvaluator::forward_into(const double* x, Scratch& s) const {
  const std::size_t n = model_.n_features();
  const std::size_t m = model_.n_hidden();
  const double* Wt = Wt_.data();
  const double* W = model_.W.data();
  s.support.clear();
  std::fill(s.h.begin(), s.h.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    s.support.push_back(j);
    const double* wj = Wt + j * m;
    for (std::size_t k = 0; k < m; ++k) s.h[k] += xj * wj[k];
  }
  std::copy(model_.b.begin(), model_.b.end(), s.z.begin());
  for (std::size_t k = 0; k < m; ++k) {
    const double hk = s.h[k];
    const double* wk = W + k * n;
    for (std::size_t i = 0; i < n; ++i) s.z[i] += hk * wk[i];
  }
}

Vector ToyEvaluator::forward(std::span<const double> x) const {
  check_model_input(model_, x.size());
  Scratch s(model_.n_features(), model_.n_hidden());
  forward_into(x.data(), s);
  Vector out(model_.n_features());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.z[i] > 0.0 ? s.z[i] : 0.0;
  return out;
}

double ToyEvaluator::example_loss(std::span<const double> x) const {
  check_model_input(model_, x.size());
  const std::size_t n = model_.n_features();
  Scratch s(n, model_.n_hidden());
  forward_into(x.data(), s);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (s.z[i] > 0.0 ? s.z[i] : 0.0) - x[i];
    total += r * r;
  }
  return total / static_cast<double>(n);
}

double ToyEvaluator::loss(const Matrix& inputs) const {
  SPLAB_REQUIRE(inputs.rows() > 0, "loss: empty batch");
  check_model_input(model_, inputs.cols());
  const std::size_t n = model_.n_features();
  Scratch s(n, model_.n_hidden());
  double total = 0.0;
  for (std::size_t bi = 0; bi < inputs.rows(); ++bi) {
    const double* x = inputs.data() + bi * n;
    forward_into(x, s);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = (s.z[i] > 0.0 ? s.z[i] : 0.0) - x[i];
      acc += r * r;
    }
    total += acc;
  }
  return total / static_cast<double>(inputs.rows() * n);
}

ModelGradients ToyEvaluator::grad_params(const Matrix& inputs, double* loss_out) const {
  SPLAB_REQUIRE(inputs.rows() > 0, "grad_params: empty batch");
  check_model_input(model_, inputs.cols());
  const std::size_t n = model_.n_features();
  const std::size_t m = model_.n_hidden();
  const double scale = 2.0 / static_cast<double>(inputs.rows() * n);

  // Accumulate dWᵀ so both outer products are contiguous length-m updates.
  Matrix dWt(n, m);
  Vector db(n);
  Scratch s(n, m);
  const double* Wt = Wt_.data();
  double* dwt = dWt.data();
  double total = 0.0;

  for (std::size_t bi = 0; bi < inputs.rows(); ++bi) {
    const double* x = inputs.data() + bi * n;
    forward_into(x, s);
    double acc = 0.0;
    s.open.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const bool active = s.z[i] > 0.0;
      const double r = (active ? s.z[i] : 0.0) - x[i];
      acc += r * r;
      if (active && r != 0.0) {
        s.g[i] = scale * r;
        db[i] += s.g[i];
        s.open.push_back(i);
      }
    }
    total += acc;
    // Decoder use of W: dWᵀ[i] += gᵢ h. Encoder use: u = W g, dWᵀ[j] += xⱼ u.
    std::fill(s.u.begin(), s.u.end(), 0.0);
    for (std::size_t i : s.open) {
      const double gi = s.g[i];
      const double* wi = Wt + i * m;
      double* di = dwt + i * m;
      for (std::size_t k = 0; k < m; ++k) {
        di[k] += gi * s.h[k];
        s.u[k] += gi * wi[k];
      }
    }
    for (std::size_t j : s.support) {
      const double xj = x[j];
      double* dj = dwt + j * m;
      for (std::size_t k = 0; k < m; ++k) dj[k] += xj * s.u[k];
    }
  }
  if (loss_out) *loss_out = total / static_cast<double>(inputs.rows() * n);
  return ModelGradients{dWt.transposed(), std::move(db)};
}

Vector ToyEvaluator::grad_input(std::span<const double> x) const {
  check_model_input(model_, x.size());
  const std::size_t n = model_.n_features();
  const std::size_t m = model_.n_hidden();
  const double scale = 2.0 / static_cast<double>(n);
  Scratch s(n, m);
  forward_into(x.data(), s);
  // dL/dx = Wᵀ (W g) − r with r = 2(x' − x)/n and g = r on open units.
  Vector out(n);
  std::fill(s.u.begin(), s.u.end(), 0.0);
  const double* Wt = Wt_.data();
  for (std::size_t i = 0; i < n; ++i) {
    const bool active = s.z[i] > 0.0;
    const double r = scale * ((active ? s.z[i] : 0.0) - x[i]);
    out[i] = -r;
    if (active && r != 0.0) {
      const double* wi = Wt + i * m;
      for (std::size_t k = 0; k < m; ++k) s.u[k] += r * wi[k];
    }
  }
  const double* W = model_.W.data();
  for (std::size_t k = 0; k < m; ++k) {
    const double uk = s.u[k];
    if (uk == 0.0) continue;
    const double* wk = W + k * n;
    for (std::size_t i = 0; i < n; ++i) out[i] += uk * wk[i];
  }
  return out;
}

ToyModel::ToyModel(Matrix w, Vector bias) : W(std::move(w)), b(std::move(bias)) {
  SPLAB_REQUIRE(W.cols() == b.size(), "ToyModel: bias length != n_features");
}

ToyModel ToyModel::random_init(std::size_t n_features, std::size_t n_hidden, Rng& rng,
                               double stddev) {
  ToyModel model(n_features, n_hidden);
  for (auto& w : model.W.span()) w = rng.gaussian(0.0, stddev);
  return model;
}

Vector FeatureBatch::example(std::size_t i) const {
  auto r = data.row(i);
  return Vector(std::vector<double>(r.begin(), r.end()));
}

FeatureBatch sample_batch(Rng& rng, std::size_t batch_size, std::size_t n_features,
                          double density) {
  SPLAB_REQUIRE(density > 0.0 && density <= 1.0, "sample_batch: density must be in (0, 1]");
  FeatureBatch batch{Matrix(batch_size, n_features), density};
  for (auto& v : batch.data.span()) {
    const bool active = rng.uniform() < density;
    v = active ? rng.uniform_open() : 0.0;
  }
  return batch;
}

Vector hidden(const ToyModel& model, const Vector& x) { return matvec(model.W, x); }

Vector forward(const ToyModel& model, const Vector& x) {
  return ToyEvaluator(model).forward(x.span());
}

double example_loss(const ToyModel& model, const Vector& x) {
  return ToyEvaluator(model).example_loss(x.span());
}

double loss(const ToyModel& model, const Matrix& inputs) { return ToyEvaluator(model).loss(inputs); }

double loss(const ToyModel& model, const FeatureBatch& batch) { return loss(model, batch.data); }

ModelGradients grad_params(const ToyModel& model, const Matrix& inputs, double* loss_out) {
  return ToyEvaluator(model).grad_params(inputs, loss_out);
}

ModelGradients grad_params(const ToyModel& model, const FeatureBatch& batch, double* loss_out) {
  return grad_params(model, batch.data, loss_out);
}

Vector grad_input(const ToyModel& model, const Vector& x) {
  return ToyEvaluator(model).grad_input(x.span());
}

bool all_finite(const ToyModel& model) noexcept {
  return model.W.all_finite() && model.b.all_finite();
}

}  // namespace splab
