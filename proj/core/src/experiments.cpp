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

#include "splab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "splab/io.hpp"
#include "splab/version.hpp"

namespace splab {

namespace {

using ojson = nlohmann::ordered_json;

void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ojson attack_json(const AttackConfig& a) {
  ojson j;
  j["epsilon_fraction"] = a.epsilon_fraction;
  j["noise_scale"] = a.noise_scale;
  j["variant"] = std::string(to_string(a.variant));
  j["scope"] = std::string(to_string(a.scope));
  j["statistic"] = std::string(to_string(a.statistic));
  return j;
}

// Seed and logging period are per-run plumbing and stay out of the digest.
ojson train_json(const TrainConfig& c) {
  ojson j;
  j["steps"] = c.steps;
  j["learning_rate"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["optimizer"] = std::string(to_string(c.optimizer));
  j["adam"] = {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}};
  j["alpha"] = c.alpha;
  j["attack"] = c.attack ? attack_json(*c.attack) : ojson(nullptr);
  j["init_stddev"] = c.init_stddev;
  return j;
}

ojson spec_json(const SweepSpec& s) {
  ojson j;
  j["densities"] = s.densities;
  j["n_features"] = s.n_features;
  j["n_hidden"] = s.n_hidden;
  j["standard"] = train_json(s.standard);
  j["adversarial"] = s.adversarial ? train_json(*s.adversarial) : ojson(nullptr);
  j["eval_attack"] = attack_json(s.eval_attack);
  j["epsilon_reference"] = std::string(to_string(s.epsilon_reference));
  j["eval_batch_size"] = s.eval_batch_size;
  j["master_seed"] = s.master_seed;
  return j;
}

std::string checkpoint_name(std::size_t index, bool robust) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "checkpoints/%s_%03zu.splb", robust ? "adv" : "std", index);
  return buf;
}

std::string density_tag(double d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", d);
  return buf;
}

struct Job {
  std::size_t index;  // position in densities
  bool robust;
};

}  // namespace

std::string_view to_string(EpsilonReference r) {
  return r == EpsilonReference::DenseBatch ? "dense" : "per-density";
}

EpsilonReference parse_epsilon_reference(std::string_view s) {
  if (s == "dense") return EpsilonReference::DenseBatch;
  if (s == "per-density") return EpsilonReference::PerDensity;
  throw ContractError("unknown epsilon reference '" + std::string(s) +
                      "' (expected dense|per-density)");
}

AttackConfig default_eval_attack() {
  AttackConfig a;
  a.statistic = VulnerabilityStat::LossRatio;
  return a;
}

std::vector<double> log_spaced_densities(std::size_t count, double high, double low) {
  SPLAB_REQUIRE(count >= 1, "density grid needs at least one point");
  SPLAB_REQUIRE(high > 0.0 && high <= 1.0 && low > 0.0 && low <= high,
                "density grid bounds must satisfy 0 < low <= high <= 1");
  if (count == 1) return {high};
  SPLAB_REQUIRE(low < high, "a multi-point grid needs low < high");
  std::vector<double> out(count);
  const double a = std::log(high);
  const double b = std::log(low);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = std::exp(a + t * (b - a));
  }
  out.front() = high;
  out.back() = low;
  return out;
}

void SweepSpec::validate() const {
  SPLAB_REQUIRE(!densities.empty(), "sweep needs at least one density");
  SPLAB_REQUIRE(densities.front() == 1.0,
                "first sweep density must be 1.0 (the vulnerability baseline)");
  for (std::size_t i = 0; i < densities.size(); ++i) {
    SPLAB_REQUIRE(densities[i] > 0.0 && densities[i] <= 1.0, "densities must lie in (0, 1]");
    if (i > 0) SPLAB_REQUIRE(densities[i] < densities[i - 1], "densities must strictly decrease");
  }
  SPLAB_REQUIRE(n_features >= 1 && n_hidden >= 1, "model shape must be positive");
  SPLAB_REQUIRE(eval_batch_size >= 1, "eval batch size must be positive");
  standard.validate();
  SPLAB_REQUIRE(!standard.attack, "the standard config must not carry an attack");
  if (adversarial) {
    adversarial->validate();
    SPLAB_REQUIRE(adversarial->attack.has_value(), "the adversarial config needs an attack");
  }
  eval_attack.validate();
}

std::string SweepSpec::run_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(spec_json(*this).dump())));
  return buf;
}

std::optional<std::size_t> SweepResult::find(double density, bool robust) const {
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].density == density && rows[i].trained_robust == robust) return i;
  return std::nullopt;
}

SweepResult run_sweep(const SweepSpec& spec, const SweepLog& log) {
  spec.validate();
  const std::string hash = spec.run_hash();
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };

  if (spec.out_dir) {
    std::filesystem::create_directories(*spec.out_dir / "checkpoints");
    const auto stamp = *spec.out_dir / "run_hash";
    if (std::filesystem::exists(stamp)) {
      const auto bytes = read_file(stamp);
      const std::string existing(bytes.begin(), bytes.end());
      if (existing != hash)
        throw ContractError("output directory " + spec.out_dir->string() +
                            " belongs to a different run (hash " + existing + ")");
    } else {
      write_file_atomic(stamp, std::string_view(hash));
    }
  }

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < spec.densities.size(); ++i) {
    jobs.push_back({i, false});
    if (spec.adversarial) jobs.push_back({i, true});
  }

  auto eval_batch = [&](std::size_t index) {
    Rng batch_rng = Rng(spec.master_seed).substream(kEvalBatchStream).substream(index);
    return sample_batch(batch_rng, spec.eval_batch_size, spec.n_features, spec.densities[index]);
  };
  std::vector<double> epsilons(spec.densities.size(), 0.0);
  const bool shared_radius = spec.eval_attack.scope == EpsilonScope::MeanInputNorm &&
                             spec.epsilon_reference == EpsilonReference::DenseBatch;
  const double dense_radius =
      shared_radius ? resolve_epsilon(eval_batch(0), spec.eval_attack.epsilon_fraction) : 0.0;

  struct Slot {
    std::optional<ToyModel> model;
    SweepRow row;
    std::string error;
  };
  std::vector<Slot> slots(jobs.size());
  std::mutex log_mutex;
  const Rng root(spec.master_seed);

  parallel_for(jobs.size(), spec.threads, [&](std::size_t j) {
    const Job job = jobs[j];
    const double density = spec.densities[job.index];
    Slot& slot = slots[j];
    slot.row.density = density;
    slot.row.trained_robust = job.robust;
    slot.row.seed = derive_seed(spec.master_seed, job.index);
    try {
      std::optional<ToyModel> model;
      std::filesystem::path ckpt;
      if (spec.out_dir) {
        slot.row.checkpoint = checkpoint_name(job.index, job.robust);
        ckpt = *spec.out_dir / slot.row.checkpoint;
        if (std::filesystem::exists(ckpt)) {
          try {
            model = load_toy_checkpoint(ckpt);
          } catch (const std::exception&) {
            model.reset();
          }
        }
      }
      const bool resumed = model.has_value();
      if (!model) {
        TrainConfig cfg = job.robust ? *spec.adversarial : spec.standard;
        cfg.seed = slot.row.seed;
        const Rng rng(cfg.seed);
        auto trained = job.robust
                           ? train_adversarial(cfg, spec.n_features, spec.n_hidden, density, rng)
                           : train_standard(cfg, spec.n_features, spec.n_hidden, density, rng);
        model = std::move(trained.first);
        if (spec.out_dir) save_checkpoint(ckpt, *model);
      }
      if (!all_finite(*model)) throw NumericError("trained model has non-finite parameters");

      const FeatureBatch batch = eval_batch(job.index);
      const Rng attack_rng = root.substream(kEvalAttackStream).substream(job.index);
      const AttackOutcome outcome =
          shared_radius
              ? attack_batch_with_epsilon(*model, batch, spec.eval_attack, dense_radius, attack_rng)
              : attack_batch(*model, batch, spec.eval_attack, attack_rng);
      if (!job.robust) epsilons[job.index] = outcome.epsilon;
      SweepRow& row = slot.row;
      row.features_per_dimension = features_per_dimension(*model);
      row.clean_loss = outcome.clean_loss;
      row.adv_loss = outcome.adv_loss;
      row.vulnerability = vulnerability_of(outcome, spec.eval_attack.statistic);
      row.mean_offdiag = mean_offdiag_interference(interference_matrix(*model));
      row.antipodal = row.features_per_dimension >= kAntipodalLow &&
                      row.features_per_dimension <= kAntipodalHigh;
      if (!std::isfinite(row.features_per_dimension) || !std::isfinite(row.clean_loss) ||
          !std::isfinite(row.adv_loss) || !std::isfinite(row.vulnerability) ||
          !std::isfinite(row.mean_offdiag))
        throw NumericError("non-finite metric");
      slot.model = std::move(model);

      std::lock_guard lock(log_mutex);
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s density=%s fpd=%.4f clean=%.5f adv=%.5f%s",
                    job.robust ? "robust  " : "standard", density_tag(density).c_str(),
                    row.features_per_dimension, row.clean_loss, row.adv_loss,
                    resumed ? " (resumed)" : "");
      say(buf);
    } catch (const std::exception& e) {
      slot.model.reset();
      slot.error = e.what();
      std::lock_guard lock(log_mutex);
      say(std::string("FAILED density=") + density_tag(density) +
          (job.robust ? " robust: " : " standard: ") + e.what());
    }
  });

  SweepResult result;
  result.run_hash = hash;
  const Slot& base = slots.front();
  if (!base.model)
    throw std::runtime_error("baseline (density 1.0, standard) failed: " + base.error);
  result.baseline_vulnerability = base.row.vulnerability;
  result.epsilons = epsilons;

  for (auto& slot : slots) {
    if (!slot.model) {
      result.failures.push_back(
          {slot.row.density, slot.row.trained_robust, slot.row.seed, slot.error});
      continue;
    }
    slot.row.relative_vulnerability =
        relative_vulnerability(slot.row.vulnerability, result.baseline_vulnerability);
    result.rows.push_back(slot.row);
    result.models.push_back(std::move(*slot.model));
  }

  if (spec.out_dir) {
    write_file_atomic(*spec.out_dir / "sweep.csv", sweep_to_csv(result));
    write_file_atomic(*spec.out_dir / "manifest.json", sweep_manifest_json(spec, result));
  }
  return result;
}

std::vector<PairRow> pair_rows(const SweepResult& sweep) {
  std::vector<PairRow> pairs;
  for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
    const SweepRow& s = sweep.rows[i];
    if (s.trained_robust) continue;
    const auto r = sweep.find(s.density, true);
    if (!r) continue;
    const SweepRow& rob = sweep.rows[*r];
    PairRow p;
    p.density = s.density;
    p.standard = s;
    p.robust = rob;
    p.delta_features_per_dimension = rob.features_per_dimension - s.features_per_dimension;
    p.delta_vulnerability = rob.relative_vulnerability - s.relative_vulnerability;
    p.offdiag_ratio = rob.mean_offdiag > 0.0 ? s.mean_offdiag / rob.mean_offdiag
                                             : std::numeric_limits<double>::quiet_NaN();
    pairs.push_back(p);
  }
  return pairs;
}

PairedResult run_paired_robustness_experiment(const SweepSpec& spec, const SweepLog& log) {
  SPLAB_REQUIRE(spec.adversarial.has_value(),
                "paired experiment needs an adversarial training config");
  PairedResult out;
  out.sweep = run_sweep(spec, log);
  out.pairs = pair_rows(out.sweep);
  if (spec.out_dir) write_file_atomic(*spec.out_dir / "pairs.csv", pairs_to_csv(out.pairs));
  return out;
}

namespace {

std::vector<double> mean_overlay(const InterferenceGraph& graph, const ToyModel& model,
                                 const Matrix& inputs) {
  std::vector<double> acc(graph.nodes.size(), 0.0);
  if (inputs.rows() == 0) return acc;
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    const auto row = inputs.row(r);
    const Vector x(std::vector<double>(row.begin(), row.end()));
    const auto h = highlight_active_interference(graph, model, x);
    for (std::size_t a = 0; a < acc.size(); ++a) acc[a] += (*h.highlight)[a];
  }
  for (double& v : acc) v /= static_cast<double>(inputs.rows());
  return acc;
}

InterferenceGraph with_overlay(InterferenceGraph g, std::vector<double> overlay) {
  g.highlight = std::move(overlay);
  return g;
}

}  // namespace

InterferenceAnalysis analyze_interference_exploitation(const ToyModel& model,
                                                       const ToyModel& robust_model,
                                                       const FeatureBatch& batch,
                                                       const AttackConfig& cfg, const Rng& rng) {
  if (model.n_features() != robust_model.n_features() ||
      model.n_hidden() != robust_model.n_hidden())
    throw ContractError("interference analysis needs two models of the same shape");
  SPLAB_REQUIRE(batch.data.cols() == model.n_features(), "batch width must match the models");

  InterferenceAnalysis out;
  const auto g_nr = build_graph(model);
  const auto g_r = build_graph(robust_model);
  const Matrix adv_nr = perturb_inputs(model, batch.data, cfg, rng);
  const Matrix adv_r = perturb_inputs(robust_model, batch.data, cfg, rng);
  out.clean_nonrobust = with_overlay(g_nr, mean_overlay(g_nr, model, batch.data));
  out.adv_nonrobust = with_overlay(g_nr, mean_overlay(g_nr, model, adv_nr));
  out.clean_robust = with_overlay(g_r, mean_overlay(g_r, robust_model, batch.data));
  out.adv_robust = with_overlay(g_r, mean_overlay(g_r, robust_model, adv_r));
  out.heatmap_nonrobust = interference_matrix(model);
  out.heatmap_robust = interference_matrix(robust_model);
  return out;
}

NumberLineReport superposition_number_line(const PairedResult& paired,
                                           std::span<const double> selected) {
  NumberLineReport rep;
  for (const auto& row : paired.sweep.rows)
    rep.points.push_back({row.density, row.features_per_dimension, row.trained_robust});
  std::stable_sort(rep.points.begin(), rep.points.end(),
                   [](const NumberLinePoint& a, const NumberLinePoint& b) {
                     if (a.features_per_dimension != b.features_per_dimension)
                       return a.features_per_dimension < b.features_per_dimension;
                     if (a.density != b.density) return a.density > b.density;
                     return !a.robust && b.robust;
                   });
  for (const auto& p : paired.pairs)
    rep.segments.push_back(
        {p.density, p.standard.features_per_dimension, p.robust.features_per_dimension});

  for (double want : selected) {
    if (paired.pairs.empty()) break;
    const PairRow* best = &paired.pairs.front();
    for (const auto& p : paired.pairs)
      if (std::abs(p.density - want) < std::abs(best->density - want)) best = &p;
    for (bool robust : {false, true}) {
      const auto idx = paired.sweep.find(best->density, robust);
      if (!idx) continue;
      rep.graphs.push_back({best->density, robust, build_graph(paired.sweep.models[*idx])});
    }
  }
  return rep;
}

std::string number_line_to_json(const NumberLineReport& report) {
  ojson j;
  auto pts = ojson::array();
  for (const auto& p : report.points)
    pts.push_back({{"density", p.density},
                   {"features_per_dimension", p.features_per_dimension},
                   {"robust", p.robust}});
  auto segs = ojson::array();
  for (const auto& s : report.segments)
    segs.push_back({{"density", s.density}, {"from", s.from}, {"to", s.to}});
  auto graphs = ojson::array();
  for (const auto& g : report.graphs)
    graphs.push_back({{"density", g.density},
                      {"robust", g.robust},
                      {"graph", ojson::parse(graph_to_json(g.graph))}});
  j["points"] = std::move(pts);
  j["segments"] = std::move(segs);
  j["graphs"] = std::move(graphs);
  return j.dump(2);
}

NumberLineReport number_line_from_json(std::string_view text) {
  NumberLineReport rep;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& p : j.at("points"))
      rep.points.push_back({p.at("density").get<double>(),
                            p.at("features_per_dimension").get<double>(),
                            p.at("robust").get<bool>()});
    for (const auto& s : j.at("segments"))
      rep.segments.push_back(
          {s.at("density").get<double>(), s.at("from").get<double>(), s.at("to").get<double>()});
    for (const auto& g : j.at("graphs"))
      rep.graphs.push_back({g.at("density").get<double>(), g.at("robust").get<bool>(),
                            graph_from_json(g.at("graph").dump())});
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(std::string("number-line JSON: ") + e.what());
  }
  return rep;
}

std::vector<std::pair<std::string, std::string>> number_line_to_dot(
    const NumberLineReport& report) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& g : report.graphs) {
    const std::string key =
        "d" + density_tag(g.density) + (g.robust ? "_robust" : "_standard");
    out.emplace_back(key, graph_to_dot(g.graph, key));
  }
  return out;
}

std::string sweep_csv_header() {
  return "density,trained_robust,seed,features_per_dimension,clean_loss,adv_loss,"
         "vulnerability,relative_vulnerability,mean_offdiag,antipodal,checkpoint";
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << sweep_csv_header() << '\n';
  for (const auto& r : result.rows) {
    out << format_double(r.density) << ',' << (r.trained_robust ? 1 : 0) << ',' << r.seed << ','
        << format_double(r.features_per_dimension) << ',' << format_double(r.clean_loss) << ','
        << format_double(r.adv_loss) << ',' << format_double(r.vulnerability) << ','
        << format_double(r.relative_vulnerability) << ',' << format_double(r.mean_offdiag)
        << ',' << (r.antipodal ? 1 : 0) << ',' << r.checkpoint << '\n';
  }
  return out.str();
}

std::string pairs_to_csv(const std::vector<PairRow>& pairs) {
  std::ostringstream out;
  out << "density,fpd_standard,fpd_robust,delta_fpd,relvuln_standard,relvuln_robust,"
         "delta_relvuln,offdiag_standard,offdiag_robust,offdiag_ratio\n";
  for (const auto& p : pairs) {
    out << format_double(p.density) << ',' << format_double(p.standard.features_per_dimension)
        << ',' << format_double(p.robust.features_per_dimension) << ','
        << format_double(p.delta_features_per_dimension) << ','
        << format_double(p.standard.relative_vulnerability) << ','
        << format_double(p.robust.relative_vulnerability) << ','
        << format_double(p.delta_vulnerability) << ',' << format_double(p.standard.mean_offdiag)
        << ',' << format_double(p.robust.mean_offdiag) << ',' << format_double(p.offdiag_ratio)
        << '\n';
  }
  return out.str();
}

std::string sweep_manifest_json(const SweepSpec& spec, const SweepResult& result) {
  ojson j;
  j["library"] = "splab";
  j["version"] = kVersionString;
  j["run_hash"] = result.run_hash;
  j["spec"] = spec_json(spec);
  j["baseline_vulnerability"] = result.baseline_vulnerability;
  j["epsilons"] = result.epsilons;
  auto rows = ojson::array();
  for (const auto& r : result.rows)
    rows.push_back({{"density", r.density},
                    {"trained_robust", r.trained_robust},
                    {"seed", r.seed},
                    {"checkpoint", r.checkpoint}});
  j["rows"] = std::move(rows);
  auto failures = ojson::array();
  for (const auto& f : result.failures)
    failures.push_back({{"density", f.density},
                        {"trained_robust", f.trained_robust},
                        {"seed", f.seed},
                        {"error", f.error}});
  j["failures"] = std::move(failures);
  j["artifacts"] = {{"table", "sweep.csv"}};
  return j.dump(2);
}

}  // namespace splab
