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
#include <span>
#include <vector>

namespace splab::stats {

double mean(std::span<const double> v);

/// Sample Pearson correlation. NaN when either series is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Average ranks (ties share the mean rank), 1-based.
std::vector<double> ranks(std::span<const double> v);

/// Pearson correlation of the average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// One-sided exact sign test: P(X ≥ positives) for X ~ Binomial(positives +
/// negatives, 1/2). Zero differences are dropped before calling.
double sign_test_p(std::size_t positives, std::size_t negatives);

}  // namespace splab::stats
