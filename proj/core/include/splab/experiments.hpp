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

// Sparsity sweeps, paired standard/robust sweeps and the interference
// exploitation analysis.
//
// Every sweep point i trains with seed derive_seed(master_seed, i); the
// robust member of a pair reuses that seed. Evaluation at point i draws its
// batch from Rng(master_seed).substream(kEvalBatchStream).substream(i) and
// its attack noise from ...substream(kEvalAttackStream).substream(i), so the
// two members of a pair are scored on the same inputs.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "splab/attacks.hpp"
#include "splab/metrics.hpp"
#include "splab/toymodel.hpp"
#include "splab/training.hpp"

namespace splab {

inline constexpr std::uint64_t kEvalBatchStream = 11;
inline constexpr std::uint64_t kEvalAttackStream = 12;

/// Rows with features_per_dimension in this band are flagged antipodal.
inline constexpr double kAntipodalLow = 1.8;
inline constexpr double kAntipodalHigh = 2.2;

/// Which inputs set the evaluation radius when the attack scope is
/// MeanInputNorm.
///   DenseBatch: one radius for the whole sweep, fraction · mean ‖x‖₂ of the
///               density-1.0 evaluation batch.
///   PerDensity: each point uses the mean norm of its own evaluation batch.
enum class EpsilonReference { DenseBatch, PerDensity };

std::string_view to_string(EpsilonReference r);
EpsilonReference parse_epsilon_reference(std::string_view s);

/// `count` densities log-spaced from `high` down to `low`, both included.
std::vector<double> log_spaced_densities(std::size_t count = 30, double high = 1.0,
                                         double low = 0.1);

/// Gradient attack, fraction 0.1, LossRatio statistic.
AttackConfig default_eval_attack();

struct SweepSpec {
  std::vector<double> densities = log_spaced_densities();
  std::size_t n_features = 100;
  std::size_t n_hidden = 20;
  TrainConfig standard = TrainConfig::standard_defaults();
  /// Adversarially trained rows are added when set.
  std::optional<TrainConfig> adversarial;
  AttackConfig eval_attack = default_eval_attack();
  EpsilonReference epsilon_reference = EpsilonReference::DenseBatch;
  std::size_t eval_batch_size = 4096;
  std::uint64_t master_seed = 0;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  std::size_t threads = 1;
  /// Checkpoints, CSV and manifest go here when set. Existing checkpoints
  /// from a run with the same hash are reused instead of retrained.
  std::optional<std::filesystem::path> out_dir;

  /// Densities strictly decreasing in (0, 1] and starting at 1.0 (the
  /// vulnerability baseline).
  void validate() const;
  /// Stable hex digest over every field that influences results
  /// (excludes threads and out_dir).
  std::string run_hash() const;
};

struct SweepRow {
  double density = 0.0;
  bool trained_robust = false;
  std::uint64_t seed = 0;
  double features_per_dimension = 0.0;
  double clean_loss = 0.0;
  double adv_loss = 0.0;
  /// The configured vulnerability statistic on the eval batch.
  double vulnerability = 0.0;
  double relative_vulnerability = 0.0;
  double mean_offdiag = 0.0;
  bool antipodal = false;
  /// Relative to out_dir; empty when nothing was persisted.
  std::string checkpoint;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

struct SweepFailure {
  double density = 0.0;
  bool trained_robust = false;
  std::uint64_t seed = 0;
  std::string error;
};

struct SweepResult {
  /// Density order, standard row before robust row at each density.
  std::vector<SweepRow> rows;
  /// Parallel to rows.
  std::vector<ToyModel> models;
  std::vector<SweepFailure> failures;
  double baseline_vulnerability = 0.0;
  /// Radius used at each density, in `densities` order.
  std::vector<double> epsilons;
  std::string run_hash;

  /// Index of the row for (density, robust), or nullopt.
  std::optional<std::size_t> find(double density, bool robust) const;
};

/// Progress messages (one line each) for long runs.
using SweepLog = std::function<void(const std::string&)>;

/// Trains and scores one model per density (two with `adversarial` set).
/// Per-point failures land in `failures`; a failed baseline throws.
SweepResult run_sweep(const SweepSpec& spec, const SweepLog& log = {});

struct PairRow {
  double density = 0.0;
  SweepRow standard;
  SweepRow robust;
  double delta_features_per_dimension = 0.0;  // robust − standard
  double delta_vulnerability = 0.0;           // robust − standard, relative units
  double offdiag_ratio = 0.0;                 // standard / robust; NaN when robust is 0
};

struct PairedResult {
  SweepResult sweep;
  std::vector<PairRow> pairs;
};

/// run_sweep with adversarial rows required, then pairs by density.
/// Densities where either member failed are left out of `pairs`.
PairedResult run_paired_robustness_experiment(const SweepSpec& spec, const SweepLog& log = {});

/// Builds pairs from an existing sweep.
std::vector<PairRow> pair_rows(const SweepResult& sweep);

struct InterferenceAnalysis {
  InterferenceGraph clean_nonrobust;
  InterferenceGraph adv_nonrobust;
  InterferenceGraph clean_robust;
  InterferenceGraph adv_robust;
  Matrix heatmap_nonrobust;
  Matrix heatmap_robust;
};

/// Graph overlays averaged over the batch: each example's overlay is the
/// normalised interference_received on that input. Adversarial inputs for
/// each model come from attacking that model with `cfg`.
InterferenceAnalysis analyze_interference_exploitation(const ToyModel& model,
                                                       const ToyModel& robust_model,
                                                       const FeatureBatch& batch,
                                                       const AttackConfig& cfg, const Rng& rng);

struct NumberLinePoint {
  double density = 0.0;
  double features_per_dimension = 0.0;
  bool robust = false;
  friend bool operator==(const NumberLinePoint&, const NumberLinePoint&) = default;
};

struct NumberLineSegment {
  double density = 0.0;
  double from = 0.0;  // standard
  double to = 0.0;    // robust
  friend bool operator==(const NumberLineSegment&, const NumberLineSegment&) = default;
};

struct NumberLineGraph {
  double density = 0.0;
  bool robust = false;
  InterferenceGraph graph;
  friend bool operator==(const NumberLineGraph&, const NumberLineGraph&) = default;
};

struct NumberLineReport {
  /// Sorted by features_per_dimension, ties by density then standard first.
  std::vector<NumberLinePoint> points;
  std::vector<NumberLineSegment> segments;
  std::vector<NumberLineGraph> graphs;
  friend bool operator==(const NumberLineReport&, const NumberLineReport&) = default;
};

/// Each selected density picks the nearest pair; both members get a graph.
NumberLineReport superposition_number_line(const PairedResult& paired,
                                           std::span<const double> selected);

std::string number_line_to_json(const NumberLineReport& report);
NumberLineReport number_line_from_json(std::string_view json);
/// One DOT document per embedded graph, keyed "d<density>_<standard|robust>".
std::vector<std::pair<std::string, std::string>> number_line_to_dot(const NumberLineReport& report);

/// density,trained_robust,seed,features_per_dimension,clean_loss,adv_loss,
/// vulnerability,relative_vulnerability,mean_offdiag,antipodal,checkpoint
std::string sweep_csv_header();
std::string sweep_to_csv(const SweepResult& result);
std::string pairs_to_csv(const std::vector<PairRow>& pairs);
std::string sweep_manifest_json(const SweepSpec& spec, const SweepResult& result);

}  // namespace splab
