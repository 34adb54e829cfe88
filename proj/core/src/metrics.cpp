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

#include "splab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace splab {

double features_per_dimension(const ToyModel& model) {
  if (model.n_hidden() == 0) return 0.0;
  return frobenius_sq(model.W) / static_cast<double>(model.n_hidden());
}

double features_per_input_feature(const ToyModel& model) {
  if (model.n_features() == 0) return 0.0;
  return frobenius_sq(model.W) / static_cast<double>(model.n_features());
}

Matrix interference_matrix(const ToyModel& model) { return gram(model.W); }

namespace {

template <typename F>
double mean_offdiag(const Matrix& m, F f) {
  SPLAB_REQUIRE(m.rows() == m.cols(), "mean_offdiag_interference: matrix must be square");
  const std::size_t n = m.rows();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) total += f(m(i, j));
  return total / static_cast<double>(n * (n - 1));
}

}  // namespace

double mean_offdiag_interference(const Matrix& m) {
  return mean_offdiag(m, [](double v) { return std::abs(v); });
}

double mean_offdiag_interference_squared(const Matrix& m) {
  return mean_offdiag(m, [](double v) { return v * v; });
}

SuperpositionSummary summarize(const ToyModel& model, double represented_threshold) {
  const Matrix g = interference_matrix(model);
  SuperpositionSummary s;
  s.features_per_dimension = features_per_dimension(model);
  s.mean_offdiag_interference = mean_offdiag_interference(g);
  s.mean_offdiag_interference_squared = mean_offdiag_interference_squared(g);
  for (std::size_t i = 0; i < g.rows(); ++i)
    if (g(i, i) > represented_threshold) ++s.n_represented_features;
  return s;
}

InterferenceGraph build_graph(const ToyModel& model, double node_threshold,
                              double edge_threshold) {
  SPLAB_REQUIRE(node_threshold >= 0.0 && edge_threshold >= 0.0,
                "build_graph: thresholds must be >= 0");
  const Matrix g = interference_matrix(model);
  InterferenceGraph graph;
  graph.n_features = model.n_features();
  for (std::size_t i = 0; i < g.rows(); ++i)
    if (g(i, i) > node_threshold) graph.nodes.push_back({i, g(i, i)});
  for (std::size_t a = 0; a < graph.nodes.size(); ++a) {
    for (std::size_t b = a + 1; b < graph.nodes.size(); ++b) {
      const std::size_t i = graph.nodes[a].id;
      const std::size_t j = graph.nodes[b].id;
      const double w = g(i, j) * g(i, j);
      if (w > edge_threshold) graph.edges.push_back({i, j, w});
    }
  }
  return graph;
}

Vector interference_received(const ToyModel& model, const Vector& x) {
  SPLAB_REQUIRE(x.size() == model.n_features(), "interference_received: length mismatch");
  const Matrix g = interference_matrix(model);
  Vector out(x.size());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.cols(); ++j)
      if (j != i) s += g(i, j) * x[j];
    out[i] = std::abs(s);
  }
  return out;
}

InterferenceGraph highlight_active_interference(const InterferenceGraph& graph,
                                                const ToyModel& model, const Vector& x) {
  SPLAB_REQUIRE(graph.n_features == model.n_features(),
                "highlight_active_interference: graph/model width mismatch");
  SPLAB_REQUIRE(x.size() == model.n_features(), "highlight_active_interference: length mismatch");
  for (const auto& node : graph.nodes) {
    SPLAB_REQUIRE(node.id < model.n_features() &&
                      node.norm2 == squared_norm(model.W.column(node.id).span()),
                  "highlight_active_interference: graph was built from a different model");
  }
  const Vector received = interference_received(model, x);
  double peak = 0.0;
  for (const auto& node : graph.nodes) peak = std::max(peak, received[node.id]);

  InterferenceGraph out = graph;
  std::vector<double> overlay(graph.nodes.size(), 0.0);
  if (peak > 0.0)
    for (std::size_t a = 0; a < graph.nodes.size(); ++a)
      overlay[a] = received[graph.nodes[a].id] / peak;
  out.highlight = std::move(overlay);
  return out;
}

double mean_highlight(const InterferenceGraph& graph) {
  if (!graph.highlight || graph.highlight->empty()) return 0.0;
  double s = 0.0;
  for (double v : *graph.highlight) s += v;
  return s / static_cast<double>(graph.highlight->size());
}

}  // namespace splab
