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

// Small dense linear algebra (row-major f64), a counter-based RNG and a
// central-difference gradient helper. Nothing here tries to be fast beyond
// keeping inner loops contiguous.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "splab/errors.hpp"

namespace splab {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
  explicit Vector(std::vector<double> data) : data_(std::move(data)) {}
  Vector(std::initializer_list<double> init) : data_(init) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  Vector column(std::size_t c) const;

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }

  bool all_finite() const noexcept;
  Matrix transposed() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double squared_norm(std::span<const double> a);

/// Frobenius norm squared.
double frobenius_sq(const Matrix& m);

/// m · v. Throws ContractError when m.cols() != v.size().
Vector matvec(const Matrix& m, const Vector& v);

/// mᵀ · v. Throws ContractError when m.rows() != v.size().
Vector matvec_transposed(const Matrix& m, const Vector& v);

/// mᵀ m. Only the upper triangle is computed; the lower one is mirrored so the
/// result is bitwise symmetric.
Matrix gram(const Matrix& m);

/// a · b.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Central differences (f(x + h eᵢ) − f(x − h eᵢ)) / 2h for every coordinate.
Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h);

/// Counter-based generator. Output i of stream (seed, stream_id) is
///
///   key  = splitmix_finalize(seed ^ splitmix_finalize(stream_id + 0x632BE59BD9B4E019))
///   u64ᵢ = splitmix_finalize(key + (i + 1) · 0x9E3779B97F4A7C15)
///
/// where splitmix_finalize is the SplitMix64 output mix. Derived samplers:
///
///   uniform()      = (u64 >> 11) · 2⁻⁵³                  in [0, 1)
///   uniform_open() = ((u64 >> 11) + 0.5) · 2⁻⁵³          in (0, 1)
///   gaussian()     = sqrt(−2 ln u₁) · cos(2π u₂), u₁ = uniform_open(), u₂ = uniform()
///
/// One gaussian() consumes two outputs; the sine branch is discarded so
/// every draw depends on a fixed counter window.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t counter() const noexcept { return counter_; }

  /// Independent child stream keyed by (this stream's key, id). Does not
  /// advance this generator.
  Rng substream(std::uint64_t id) const;

  std::uint64_t next_u64() noexcept;
  double uniform() noexcept;
  double uniform_open() noexcept;
  double gaussian() noexcept;
  double gaussian(double mean, double stddev) noexcept { return mean + stddev * gaussian(); }
  /// Uniform index in [0, n) by rejection on the top bits.
  std::uint64_t below(std::uint64_t n) noexcept;

  /// Direction uniformly distributed on the unit sphere in R^dim.
  Vector unit_sphere(std::size_t dim);

 private:
  Rng(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t key)
      : seed_(seed), stream_id_(stream_id), key_(key) {}

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix_finalize(std::uint64_t z) noexcept;

/// Deterministic 64-bit seed derivation for labelled sub-tasks.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) noexcept;

}  // namespace splab
