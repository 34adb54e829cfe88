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

#include "splab/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace splab {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ULL;
constexpr std::uint64_t kSubstreamSalt = 0xD1B54A32D192ED03ULL;

bool finite_span(std::span<const double> s) {
  return std::all_of(s.begin(), s.end(), [](double v) { return std::isfinite(v); });
}

template <typename T>
const T& check_finite(const T& out, const char* op) {
  if (!out.all_finite()) throw NumericError(std::string(op) + ": non-finite result");
  return out;
}

}  // namespace

bool Vector::all_finite() const noexcept { return finite_span(data_); }

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  SPLAB_REQUIRE(data_.size() == rows_ * cols_, "Matrix: data length != rows * cols");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    SPLAB_REQUIRE(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::column(std::size_t c) const {
  Vector out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

bool Matrix::all_finite() const noexcept { return finite_span(data_); }

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double dot(std::span<const double> a, std::span<const double> b) {
  SPLAB_REQUIRE(a.size() == b.size(), "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double frobenius_sq(const Matrix& m) { return squared_norm(m.span()); }

Vector matvec(const Matrix& m, const Vector& v) {
  SPLAB_REQUIRE(m.cols() == v.size(), "matvec: matrix cols != vector length");
  Vector out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), v.span());
  return check_finite(out, "matvec");
}

Vector matvec_transposed(const Matrix& m, const Vector& v) {
  SPLAB_REQUIRE(m.rows() == v.size(), "matvec_transposed: matrix rows != vector length");
  Vector out(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double s = v[r];
    if (s == 0.0) continue;
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += s * row[c];
  }
  return check_finite(out, "matvec_transposed");
}

Matrix gram(const Matrix& m) {
  const std::size_t n = m.cols();
  Matrix g(n, n);
  // Accumulate row by row: G += rowᵀ row, upper triangle only.
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = row[i];
      if (a == 0.0) continue;
      double* gi = g.data() + i * n;
      for (std::size_t j = i; j < n; ++j) gi[j] += a * row[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return check_finite(g, "gram");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  SPLAB_REQUIRE(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* oi = out.data() + i * b.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = a(i, k);
      if (s == 0.0) continue;
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) oi[j] += s * bk[j];
    }
  }
  return check_finite(out, "matmul");
}

Vector finite_diff_grad(const std::function<double(const Vector&)>& f, const Vector& x,
                        double h) {
  SPLAB_REQUIRE(h > 0.0, "finite_diff_grad: step must be positive");
  Vector g(x.size());
  Vector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) noexcept {
  return splitmix_finalize(master ^ splitmix_finalize(label * kGolden + kSubstreamSalt));
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      key_(splitmix_finalize(seed ^ splitmix_finalize(stream_id + kStreamSalt))) {}

Rng Rng::substream(std::uint64_t id) const {
  return Rng(seed_, id, splitmix_finalize(key_ ^ splitmix_finalize(id + kSubstreamSalt)));
}

std::uint64_t Rng::next_u64() noexcept {
  ++counter_;
  return splitmix_finalize(key_ + counter_ * kGolden);
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform_open() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::gaussian() noexcept {
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) noexcept {
  if (n <= 1) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

Vector Rng::unit_sphere(std::size_t dim) {
  Vector v(dim);
  double n2 = 0.0;
  while (n2 == 0.0) {
    for (auto& e : v) e = gaussian();
    n2 = squared_norm(v.span());
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& e : v) e *= inv;
  return v;
}

}  // namespace splab
