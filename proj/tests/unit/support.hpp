// Shared helpers for the unit tests: random instances and naive reference
// implementations written directly from the model equations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "splab/numkit.hpp"
#include "splab/toymodel.hpp"

namespace splab::testing {

inline ToyModel random_model(std::size_t n, std::size_t m, Rng& rng, double scale = 0.5) {
  ToyModel model(n, m);
  for (double& w : model.W.span()) w = rng.gaussian(0.0, scale);
  for (double& b : model.b.span()) b = rng.gaussian(0.0, 0.1);
  return model;
}

inline Matrix random_inputs(std::size_t rows, std::size_t n, Rng& rng) {
  Matrix x(rows, n);
  for (double& v : x.span()) v = rng.uniform();
  return x;
}

// z = WᵀW x + b by explicit triple loop.
inline std::vector<double> naive_preactivation(const ToyModel& model,
                                               std::span<const double> x) {
  const std::size_t n = model.n_features(), m = model.n_hidden();
  std::vector<double> h(m, 0.0), z(n, 0.0);
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < n; ++j) h[k] += model.W(k, j) * x[j];
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = model.b[i];
    for (std::size_t k = 0; k < m; ++k) z[i] += model.W(k, i) * h[k];
  }
  return z;
}

inline double naive_example_loss(const ToyModel& model, std::span<const double> x) {
  const auto z = naive_preactivation(model, x);
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = std::max(z[i], 0.0) - x[i];
    s += r * r;
  }
  return s / static_cast<double>(z.size());
}

inline double naive_loss(const ToyModel& model, const Matrix& x) {
  double s = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) s += naive_example_loss(model, x.row(r));
  return s / static_cast<double>(x.rows());
}

// Smallest |pre-activation| over a batch: a finite-difference step well
// below this cannot cross a ReLU kink.
inline double kink_margin(const ToyModel& model, const Matrix& x) {
  double margin = INFINITY;
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (double z : naive_preactivation(model, x.row(r))) margin = std::min(margin, std::abs(z));
  return margin;
}

inline double rel_error(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

inline Vector to_vector(std::span<const double> s) {
  return Vector(std::vector<double>(s.begin(), s.end()));
}

}  // namespace splab::testing
