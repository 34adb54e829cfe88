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

// ReLU-output toy autoencoder:
//
//   h  = W x                 (W is n_hidden × n_features)
//   x' = ReLU(Wᵀ h + b)
//   L  = mean over batch and features of (x' − x)²
//
// Gradients are written out by hand. The ReLU derivative at exactly zero is 0.

#pragma once

#include <cstddef>
#include <span>

#include "splab/numkit.hpp"

namespace splab {

struct ToyModel {
  Matrix W;  // n_hidden × n_features
  Vector b;  // n_features

  ToyModel() = default;
  ToyModel(std::size_t n_features, std::size_t n_hidden)
      : W(n_hidden, n_features), b(n_features) {}
  ToyModel(Matrix w, Vector bias);

  std::size_t n_features() const noexcept { return W.cols(); }
  std::size_t n_hidden() const noexcept { return W.rows(); }

  /// W entries ~ N(0, stddev), b = 0.
  static ToyModel random_init(std::size_t n_features, std::size_t n_hidden, Rng& rng,
                              double stddev);

  friend bool operator==(const ToyModel&, const ToyModel&) = default;
};

/// A batch of synthetic sparse feature vectors, one per row.
struct FeatureBatch {
  Matrix data;           // batch_size × n_features
  double density = 1.0;  // probability a feature is nonzero (1 − sparsity)

  std::size_t batch_size() const noexcept { return data.rows(); }
  std::size_t n_features() const noexcept { return data.cols(); }
  Vector example(std::size_t i) const;
};

struct ModelGradients {
  Matrix dW;
  Vector db;
};

/// Each entry is zero with probability 1 − density, otherwise Uniform(0, 1).
/// Draw order is row-major; every entry consumes one Bernoulli draw and
/// active entries one more uniform_open() draw.
FeatureBatch sample_batch(Rng& rng, std::size_t batch_size, std::size_t n_features,
                          double density);

Vector forward(const ToyModel& model, const Vector& x);
Vector hidden(const ToyModel& model, const Vector& x);

/// Per-example loss: mean over features of (x' − x)².
double example_loss(const ToyModel& model, const Vector& x);

/// Mean over batch and features. Works on any input matrix with n_features
/// columns (clean or perturbed).
double loss(const ToyModel& model, const Matrix& inputs);
double loss(const ToyModel& model, const FeatureBatch& batch);

/// Exact gradient of loss(model, inputs) with respect to W and b. When
/// `loss_out` is non-null the loss value is written there as a by-product.
ModelGradients grad_params(const ToyModel& model, const Matrix& inputs,
                           double* loss_out = nullptr);
ModelGradients grad_params(const ToyModel& model, const FeatureBatch& batch,
                           double* loss_out = nullptr);

/// Gradient of example_loss(model, x) with respect to x. Flows through both the
/// Wᵀ W x path and the −x residual.
Vector grad_input(const ToyModel& model, const Vector& x);

bool all_finite(const ToyModel& model) noexcept;

/// Evaluation kernels bound to one model. Caches Wᵀ so every inner loop is a
/// contiguous axpy; the free functions above construct one per call. Holds a
/// reference: the model must outlive the evaluator and stay unmodified.
class ToyEvaluator {
 public:
  explicit ToyEvaluator(const ToyModel& model);

  const ToyModel& model() const noexcept { return model_; }

  Vector forward(std::span<const double> x) const;
  double example_loss(std::span<const double> x) const;
  Vector grad_input(std::span<const double> x) const;
  double loss(const Matrix& inputs) const;
  ModelGradients grad_params(const Matrix& inputs, double* loss_out = nullptr) const;

 private:
  struct Scratch;
  void forward_into(const double* x, Scratch& s) const;

  const ToyModel& model_;
  Matrix Wt_;  // n_features × n_hidden
};

}  // namespace splab
