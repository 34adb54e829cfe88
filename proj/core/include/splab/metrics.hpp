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

// Superposition measurements on a trained toy model.

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "splab/numkit.hpp"
#include "splab/toymodel.hpp"

namespace splab {

/// ‖W‖²_F / n_hidden. Learned feature columns have roughly unit norm, so a
/// value above 1 means more features than hidden dimensions.
double features_per_dimension(const ToyModel& model);

/// ‖W‖²_F / n_features. Same numerator normalised by the input width; kept
/// alongside the hidden-width version for comparison.
double features_per_input_feature(const ToyModel& model);

/// WᵀW, n_features × n_features, bitwise symmetric.
Matrix interference_matrix(const ToyModel& model);

/// Mean of |Mᵢⱼ| over i ≠ j. Throws ContractError for non-square input.
double mean_offdiag_interference(const Matrix& m);
/// Mean of Mᵢⱼ² over i ≠ j.
double mean_offdiag_interference_squared(const Matrix& m);

struct SuperpositionSummary {
  double features_per_dimension = 0.0;
  double mean_offdiag_interference = 0.0;
  double mean_offdiag_interference_squared = 0.0;
  std::size_t n_represented_features = 0;
};

/// Column norms ‖Wᵢ‖² above `represented_threshold` count as represented.
SuperpositionSummary summarize(const ToyModel& model, double represented_threshold = 0.5);

struct GraphNode {
  std::size_t id = 0;
  double norm2 = 0.0;  // ‖Wᵢ‖²
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::size_t i = 0;  // i < j
  std::size_t j = 0;
  double weight = 0.0;  // (Wᵢ·Wⱼ)²
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Features as nodes, squared column overlaps as edges. `highlight`, when
/// present, holds one value in [0, 1] per node (same order as `nodes`).
struct InterferenceGraph {
  std::size_t n_features = 0;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::optional<std::vector<double>> highlight;

  friend bool operator==(const InterferenceGraph&, const InterferenceGraph&) = default;
};

inline constexpr double kDefaultNodeThreshold = 0.25;
inline constexpr double kDefaultEdgeThreshold = 0.01;

/// Nodes with ‖Wᵢ‖² > node_threshold; edges among them with
/// (Wᵢ·Wⱼ)² > edge_threshold, listed in (i, j) lexicographic order.
InterferenceGraph build_graph(const ToyModel& model, double node_threshold = kDefaultNodeThreshold,
                              double edge_threshold = kDefaultEdgeThreshold);

/// Interference received by each feature on input x, |Σ_{j≠i} (Wᵢ·Wⱼ) xⱼ|,
/// for all n features (no normalisation).
Vector interference_received(const ToyModel& model, const Vector& x);

/// Copy of `graph` with a per-node overlay: interference_received rescaled by
/// its maximum over the graph's nodes. A zero maximum gives an all-zero
/// overlay. Throws ContractError if the graph does not belong to the model.
InterferenceGraph highlight_active_interference(const InterferenceGraph& graph,
                                                const ToyModel& model, const Vector& x);

/// Mean node overlay (0 for a graph without nodes or overlay).
double mean_highlight(const InterferenceGraph& graph);

}  // namespace splab
