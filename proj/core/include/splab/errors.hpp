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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace splab {

/// Precondition violated by the caller (shape mismatch, out-of-range
/// probability, empty batch, ...).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation produced NaN or Inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss. Carries the step at which it was seen.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, std::size_t step)
      : NumericError(what + " (step " + std::to_string(step) + ")"), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A ratio whose denominator is zero (zero baseline vulnerability, zero clean L0).
class DegenerateBaselineError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Persisted file could not be parsed: bad magic, truncation, CRC mismatch.
class CorruptFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersionError : public CorruptFileError {
 public:
  using CorruptFileError::CorruptFileError;
};

/// Malformed or unknown configuration keys.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {
[[noreturn]] inline void contract_fail(const std::string& msg) { throw ContractError(msg); }
}  // namespace detail

#define SPLAB_REQUIRE(cond, msg)                                   \
  do {                                                             \
    if (!(cond)) ::splab::detail::contract_fail(std::string(msg)); \
  } while (0)

}  // namespace splab
