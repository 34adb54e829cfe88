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

#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "splab/attacks.hpp"
#include "splab/config.hpp"
#include "splab/errors.hpp"
#include "splab/experiments.hpp"
#include "splab/io.hpp"
#include "splab/metrics.hpp"
#include "splab/sae.hpp"
#include "splab/training.hpp"
#include "splab/version.hpp"

namespace splab::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// Sub-streams of Rng(seed) used by one-off commands.
constexpr std::uint64_t kCliEvalBatch = 21;
constexpr std::uint64_t kCliAttack = 22;
constexpr std::uint64_t kCliSaeData = 23;

constexpr const char* kFooter = R"(Environment:
  SPLAB_THREADS   default worker count when --threads is not given

CSV tables:
  sweep.csv  density,trained_robust,seed,features_per_dimension,clean_loss,adv_loss,
             vulnerability,relative_vulnerability,mean_offdiag,antipodal,checkpoint
  pairs.csv  density,fpd_standard,fpd_robust,delta_fpd,relvuln_standard,relvuln_robust,
             delta_relvuln,offdiag_standard,offdiag_robust,offdiag_ratio

Exit status: 0 success, 1 usage or configuration error, 2 runtime failure.)";

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RunConfig effective_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) {
    cfg.threads = *g.threads;
  } else if (const char* env = std::getenv("SPLAB_THREADS")) {
    try {
      cfg.threads = static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      throw UsageError(std::string("SPLAB_THREADS must be a non-negative integer, got '") + env +
                       "'");
    }
  }
  return cfg;
}

fs::path require_out(const Globals& g, const char* cmd) {
  if (g.out.empty()) throw UsageError(std::string(cmd) + " needs --out DIR");
  fs::create_directories(g.out);
  return g.out;
}

void emit(std::ostream& out, const Globals& g, const char* file, const ojson& j) {
  const std::string text = j.dump(2) + "\n";
  out << text;
  if (!g.out.empty()) write_file_atomic(fs::path(g.out) / file, std::string_view(text));
}

ojson standardization_json(const Standardization& s) {
  return {{"mean", s.mean.values()}, {"std", s.std.values()}};
}

Standardization load_standardization(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    Standardization s{Vector(j.at("mean").get<std::vector<double>>()),
                      Vector(j.at("std").get<std::vector<double>>())};
    if (s.mean.size() != s.std.size()) throw CorruptFileError("mean/std length mismatch");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError(path.string() + ": " + e.what());
  }
}

fs::path standardization_path(const std::string& flag, const std::string& sae_path) {
  if (!flag.empty()) return flag;
  return fs::path(sae_path).parent_path() / "standardization.json";
}

ojson loss_curve_json(const TrainReport& r) {
  auto arr = ojson::array();
  for (const auto& p : r.loss_curve) {
    ojson e{{"step", p.step}, {"clean_loss", p.clean_loss}};
    if (p.adv_loss) e["adv_loss"] = *p.adv_loss;
    arr.push_back(std::move(e));
  }
  return arr;
}

int cmd_train(const Globals& g, double density, bool adversarial, std::ostream& out,
              std::ostream& err) {
  const RunConfig cfg = effective_config(g);
  const fs::path dir = require_out(g, adversarial ? "advtrain" : "train");
  TrainConfig tc = adversarial ? cfg.adversarial : cfg.train;
  tc.seed = cfg.seed;
  ProgressHook hook = [&](const LossPoint& p) {
    err << "step " << p.step << " clean " << format_double(p.clean_loss);
    if (p.adv_loss) err << " adv " << format_double(*p.adv_loss);
    err << '\n';
  };
  auto [model, report] =
      adversarial ? train_adversarial(tc, cfg.n_features, cfg.n_hidden, density, Rng(tc.seed), hook)
                  : train_standard(tc, cfg.n_features, cfg.n_hidden, density, Rng(tc.seed), hook);
  save_checkpoint(dir / "model.splb", model);
  ojson j;
  j["density"] = density;
  j["seed"] = cfg.seed;
  j["adversarial"] = adversarial;
  j["run_hash"] = run_hash(cfg);
  j["checkpoint"] = "model.splb";
  j["features_per_dimension"] = features_per_dimension(model);
  j["mean_offdiag"] = mean_offdiag_interference(interference_matrix(model));
  j["final_clean_loss"] = report.final_clean_loss;
  if (report.final_adv_loss) j["final_adv_loss"] = *report.final_adv_loss;
  j["loss_curve"] = loss_curve_json(report);
  emit(out, g, "train.json", j);
  return kExitOk;
}

struct AttackArgs {
  std::string model;
  std::string variant;
  std::optional<double> eps_frac;
  std::string scope;
  std::string statistic;
  double density = 1.0;
  std::optional<std::size_t> batch;
};

int cmd_attack(const Globals& g, const AttackArgs& a, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  const ToyModel model = load_toy_checkpoint(a.model);
  AttackConfig ac = cfg.attack;
  if (!a.variant.empty()) ac.variant = parse_attack_variant(a.variant);
  if (a.eps_frac) ac.epsilon_fraction = *a.eps_frac;
  if (!a.scope.empty()) ac.scope = parse_epsilon_scope(a.scope);
  if (!a.statistic.empty()) ac.statistic = parse_vulnerability_stat(a.statistic);
  ac.validate();
  const Rng root(cfg.seed);
  Rng brng = root.substream(kCliEvalBatch);
  const FeatureBatch batch =
      sample_batch(brng, a.batch.value_or(cfg.eval_batch_size), model.n_features(), a.density);
  const AttackOutcome o = attack_batch(model, batch, ac, root.substream(kCliAttack));
  double max_norm = 0.0, sum_norm = 0.0;
  for (double v : o.perturbation_norms) {
    max_norm = std::max(max_norm, v);
    sum_norm += v;
  }
  ojson j;
  j["model"] = a.model;
  j["variant"] = std::string(to_string(ac.variant));
  j["scope"] = std::string(to_string(ac.scope));
  j["statistic"] = std::string(to_string(ac.statistic));
  j["epsilon_fraction"] = ac.epsilon_fraction;
  j["epsilon"] = o.epsilon;
  j["density"] = a.density;
  j["n_examples"] = batch.data.rows();
  j["clean_loss"] = o.clean_loss;
  j["adv_loss"] = o.adv_loss;
  j["vulnerability"] = vulnerability_of(o, ac.statistic);
  j["mean_perturbation_norm"] = sum_norm / static_cast<double>(o.perturbation_norms.size());
  j["max_perturbation_norm"] = max_norm;
  j["masking_failures"] = o.masking_failures;
  emit(out, g, "attack.json", j);
  return kExitOk;
}

int cmd_sweep(const Globals& g, std::optional<std::size_t> count, bool paired, std::ostream& out,
              std::ostream& err) {
  RunConfig cfg = effective_config(g);
  if (count) {
    cfg.densities.clear();
    cfg.density_count = *count;
  }
  cfg.validate();
  SweepSpec spec = cfg.sweep_spec(paired);
  spec.out_dir = require_out(g, paired ? "paired-sweep" : "sweep");
  const SweepLog log = [&](const std::string& line) { err << line << '\n'; };
  ojson j;
  if (paired) {
    const PairedResult r = run_paired_robustness_experiment(spec, log);
    j["rows"] = r.sweep.rows.size();
    j["pairs"] = r.pairs.size();
    j["failures"] = r.sweep.failures.size();
    j["run_hash"] = r.sweep.run_hash;
  } else {
    const SweepResult r = run_sweep(spec, log);
    j["rows"] = r.rows.size();
    j["failures"] = r.failures.size();
    j["run_hash"] = r.run_hash;
  }
  j["table"] = (fs::path(g.out) / "sweep.csv").string();
  j["manifest"] = (fs::path(g.out) / "manifest.json").string();
  out << j.dump(2) << '\n';
  return kExitOk;
}

struct GraphArgs {
  std::string model;
  std::string robust;
  std::optional<double> density;
  double node_threshold = kDefaultNodeThreshold;
  double edge_threshold = kDefaultEdgeThreshold;
  std::size_t batch = 256;
};

int cmd_graph(const Globals& g, const GraphArgs& a, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  const fs::path dir = require_out(g, "graph");
  const ToyModel model = load_toy_checkpoint(a.model);
  ojson j;
  if (!a.robust.empty()) {
    const ToyModel robust = load_toy_checkpoint(a.robust);
    Rng brng = Rng(cfg.seed).substream(kCliEvalBatch);
    const FeatureBatch batch =
        sample_batch(brng, a.batch, model.n_features(), a.density.value_or(cfg.sae.density));
    const auto an = analyze_interference_exploitation(model, robust, batch, cfg.attack,
                                                      Rng(cfg.seed).substream(kCliAttack));
    const std::pair<const char*, const InterferenceGraph*> graphs[] = {
        {"clean_nonrobust", &an.clean_nonrobust},
        {"adv_nonrobust", &an.adv_nonrobust},
        {"clean_robust", &an.clean_robust},
        {"adv_robust", &an.adv_robust}};
    for (const auto& [name, graph] : graphs) {
      write_file_atomic(dir / (std::string(name) + ".json"), graph_to_json(*graph));
      write_file_atomic(dir / (std::string(name) + ".dot"), graph_to_dot(*graph, name));
      j["mean_overlay"][name] = mean_highlight(*graph);
    }
    write_file_atomic(dir / "interference_nonrobust.csv", matrix_to_csv(an.heatmap_nonrobust));
    write_file_atomic(dir / "interference_robust.csv", matrix_to_csv(an.heatmap_robust));
    j["mean_offdiag"] = {{"nonrobust", mean_offdiag_interference(an.heatmap_nonrobust)},
                         {"robust", mean_offdiag_interference(an.heatmap_robust)}};
  } else {
    InterferenceGraph graph = build_graph(model, a.node_threshold, a.edge_threshold);
    if (a.density) {
      Rng brng = Rng(cfg.seed).substream(kCliEvalBatch);
      const FeatureBatch batch = sample_batch(brng, a.batch, model.n_features(), *a.density);
      std::vector<double> acc(graph.nodes.size(), 0.0);
      for (std::size_t r = 0; r < batch.data.rows(); ++r) {
        const auto h = highlight_active_interference(graph, model, batch.example(r));
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += (*h.highlight)[k];
      }
      for (double& v : acc) v /= static_cast<double>(batch.data.rows());
      graph.highlight = std::move(acc);
    }
    write_file_atomic(dir / "graph.json", graph_to_json(graph));
    write_file_atomic(dir / "graph.dot", graph_to_dot(graph));
    const Matrix heat = interference_matrix(model);
    write_file_atomic(dir / "interference.csv", matrix_to_csv(heat));
    j["nodes"] = graph.nodes.size();
    j["edges"] = graph.edges.size();
    j["mean_offdiag"] = mean_offdiag_interference(heat);
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

ActivationDataset activations_from(const RunConfig& cfg, const std::string& model_path,
                                   const std::string& dump_path, std::uint64_t stream,
                                   std::optional<double> density) {
  if (!dump_path.empty()) return read_activation_dump(dump_path);
  if (model_path.empty()) throw UsageError("give --model or --activations");
  const ToyModel model = load_toy_checkpoint(model_path);
  Rng rng = Rng(cfg.seed).substream(stream);
  const FeatureBatch batch = sample_batch(rng, cfg.sae.n_samples, model.n_features(),
                                          density.value_or(cfg.sae.density));
  return collect_activations(model, batch);
}

struct SaeArgs {
  std::string model;
  std::string activations;
  std::string sae;
  std::string standardization;
  std::string variant;
  std::optional<std::size_t> k;
  std::optional<double> density;
};

int cmd_sae_train(const Globals& g, const SaeArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = effective_config(g);
  const fs::path dir = require_out(g, "sae-train");
  SaeTrainConfig tc = cfg.sae.train;
  if (!a.variant.empty()) {
    if (a.variant == "topk")
      tc.variant = std::holds_alternative<TopKParams>(tc.variant) ? tc.variant
                                                                  : SaeVariant{TopKParams{}};
    else if (a.variant == "l1")
      tc.variant = std::holds_alternative<L1Params>(tc.variant) ? tc.variant
                                                                : SaeVariant{L1Params{}};
    else
      throw UsageError("--variant must be topk or l1");
  }
  if (a.k) {
    auto* t = std::get_if<TopKParams>(&tc.variant);
    if (!t) throw UsageError("--k only applies to TopK SAEs");
    t->k = *a.k;
  }
  tc.seed = cfg.seed;
  const ActivationDataset raw =
      activations_from(cfg, a.model, a.activations, kCliSaeData, a.density);
  const ActivationDataset ds = standardize(raw, cfg.sae.standardize);
  tc = tc.scaled_for(ds.dim());
  SaeTrainReport report;
  err << "training SAE on " << ds.n_samples() << " x " << ds.dim() << " activations\n";
  const SaeModel sae = train_sae(ds, tc, &report);
  save_checkpoint(dir / "sae.splb", sae);
  write_file_atomic(dir / "standardization.json",
                    standardization_json(*ds.standardization).dump(2) + "\n");
  const SaeEvalReport ev = eval_sae(sae, ds);
  ojson j;
  j["checkpoint"] = "sae.splb";
  j["standardization"] = "standardization.json";
  j["variant"] = sae.is_topk() ? "topk" : "l1";
  j["dict_size"] = sae.dict_size;
  j["final_mse"] = report.final_mse;
  j["train_mse"] = ev.mse;
  j["train_mean_l0"] = ev.mean_l0;
  j["dead_fraction"] = ev.dead_fraction;
  auto curve = ojson::array();
  for (const auto& p : report.loss_curve)
    curve.push_back({{"step", p.step}, {"mse", p.mse}, {"total", p.total},
                     {"dead_latents", p.dead_latents}});
  j["loss_curve"] = std::move(curve);
  emit(out, g, "sae_train.json", j);
  return kExitOk;
}

int cmd_sae_eval(const Globals& g, const SaeArgs& a, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  const SaeModel sae = load_sae_checkpoint(a.sae);
  const Standardization st = load_standardization(standardization_path(a.standardization, a.sae));
  const ActivationDataset raw =
      activations_from(cfg, a.model, a.activations, kCliEvalBatch, a.density);
  if (raw.dim() != st.mean.size())
    throw ContractError("activation width " + std::to_string(raw.dim()) +
                        " does not match the standardization width " +
                        std::to_string(st.mean.size()));
  const SaeEvalReport ev = eval_sae(sae, apply_standardization(raw, st));
  ojson j{{"mse", ev.mse}, {"mean_l0", ev.mean_l0}, {"dead_fraction", ev.dead_fraction},
          {"n_samples", raw.n_samples()}};
  emit(out, g, "sae_eval.json", j);
  return kExitOk;
}

int cmd_l0_ratio(const Globals& g, const SaeArgs& a, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  if (a.model.empty()) throw UsageError("l0-ratio needs --model");
  const SaeModel sae = load_sae_checkpoint(a.sae);
  const Standardization st = load_standardization(standardization_path(a.standardization, a.sae));
  const ToyModel model = load_toy_checkpoint(a.model);
  Rng rng = Rng(cfg.seed).substream(kCliEvalBatch);
  const FeatureBatch batch = sample_batch(rng, cfg.sae.n_samples, model.n_features(),
                                          a.density.value_or(cfg.sae.density));
  const Matrix adv = perturb_inputs(model, batch.data, cfg.attack, Rng(cfg.seed).substream(kCliAttack));
  const auto clean = apply_standardization(collect_activations(model, batch), st);
  const auto attacked =
      apply_standardization(collect_activations(model, adv, "adversarial"), st);
  const double ratio = l0_ratio(sae, clean, attacked);
  ojson j{{"l0_ratio", ratio},
          {"clean_mean_l0", eval_sae(sae, clean).mean_l0},
          {"adv_mean_l0", eval_sae(sae, attacked).mean_l0},
          {"attack", std::string(to_string(cfg.attack.variant))}};
  emit(out, g, "l0_ratio.json", j);
  return kExitOk;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

SweepResult load_sweep_dir(const fs::path& dir) {
  const auto bytes = read_file(dir / "sweep.csv");
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::string line;
  std::getline(in, line);
  if (line != sweep_csv_header()) throw CorruptFileError("unexpected sweep.csv header");
  SweepResult r;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split(line, ',');
    if (c.size() != 11) throw CorruptFileError("sweep.csv: bad row '" + line + "'");
    SweepRow row;
    try {
      row.density = std::stod(c[0]);
      row.trained_robust = c[1] == "1";
      row.seed = std::stoull(c[2]);
      row.features_per_dimension = std::stod(c[3]);
      row.clean_loss = std::stod(c[4]);
      row.adv_loss = std::stod(c[5]);
      row.vulnerability = std::stod(c[6]);
      row.relative_vulnerability = std::stod(c[7]);
      row.mean_offdiag = std::stod(c[8]);
      row.antipodal = c[9] == "1";
    } catch (const std::logic_error&) {
      throw CorruptFileError("sweep.csv: bad number in '" + line + "'");
    }
    row.checkpoint = c[10];
    if (row.checkpoint.empty()) throw CorruptFileError("sweep.csv row without a checkpoint");
    r.models.push_back(load_toy_checkpoint(dir / row.checkpoint));
    r.rows.push_back(std::move(row));
  }
  return r;
}

int cmd_report(const Globals& g, const std::string& sweep_dir, const std::vector<double>& select,
               std::ostream& out) {
  const fs::path dir = require_out(g, "report");
  PairedResult paired;
  paired.sweep = load_sweep_dir(sweep_dir);
  paired.pairs = pair_rows(paired.sweep);
  const NumberLineReport rep = superposition_number_line(paired, select);
  write_file_atomic(dir / "number_line.json", number_line_to_json(rep));
  ojson files = ojson::array();
  for (const auto& [key, dot] : number_line_to_dot(rep)) {
    write_file_atomic(dir / (key + ".dot"), dot);
    files.push_back(key + ".dot");
  }
  ojson j{{"points", rep.points.size()},
          {"segments", rep.segments.size()},
          {"graphs", files},
          {"report", (dir / "number_line.json").string()}};
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"splab: superposition and adversarial robustness in toy models", "splab"};
  app.footer(kFooter);
  app.set_version_flag("--version", kVersionString);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores");
  app.add_option("--out", g.out, "output directory");

  double density = 0.0;
  auto* train = app.add_subcommand("train", "train one toy model on clean data");
  train->add_option("--density", density, "feature density in (0, 1]")->required();
  auto* advtrain = app.add_subcommand("advtrain", "adversarially train one toy model");
  advtrain->add_option("--density", density, "feature density in (0, 1]")->required();

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "attack a checkpoint and summarise the outcome");
  attack->add_option("--model", attack_args.model, "toy-model checkpoint")->required();
  attack->add_option("--variant", attack_args.variant, "gradient | elhage | random");
  attack->add_option("--eps-frac", attack_args.eps_frac, "epsilon as a fraction of mean input norm");
  attack->add_option("--scope", attack_args.scope, "mean-norm | per-example");
  attack->add_option("--statistic", attack_args.statistic, "vulnerability statistic");
  attack->add_option("--density", attack_args.density, "density of the evaluation batch");
  attack->add_option("--batch", attack_args.batch, "evaluation batch size");

  std::optional<std::size_t> count;
  auto* sweep = app.add_subcommand("sweep", "standard sparsity sweep");
  sweep->add_option("--densities", count, "number of log-spaced densities");
  auto* paired = app.add_subcommand("paired-sweep", "standard + adversarial sweep, paired");
  paired->add_option("--densities", count, "number of log-spaced densities");

  GraphArgs graph_args;
  auto* graph = app.add_subcommand("graph", "export interference graph and heatmap");
  graph->add_option("--model", graph_args.model, "toy-model checkpoint")->required();
  graph->add_option("--robust", graph_args.robust, "robust checkpoint for the 2x2 comparison");
  graph->add_option("--density", graph_args.density, "overlay interference on inputs at density");
  graph->add_option("--node-threshold", graph_args.node_threshold, "minimum ||W_i||^2");
  graph->add_option("--edge-threshold", graph_args.edge_threshold, "minimum (W_i.W_j)^2");
  graph->add_option("--batch", graph_args.batch, "overlay batch size");

  SaeArgs sae_args;
  auto* sae_train = app.add_subcommand("sae-train", "train an SAE on toy-model activations");
  sae_train->add_option("--model", sae_args.model, "toy-model checkpoint");
  sae_train->add_option("--activations", sae_args.activations, "activation dump");
  sae_train->add_option("--variant", sae_args.variant, "topk | l1");
  sae_train->add_option("--k", sae_args.k, "TopK k");
  sae_train->add_option("--density", sae_args.density, "input density when sampling activations");
  auto* sae_eval = app.add_subcommand("sae-eval", "evaluate an SAE");
  sae_eval->add_option("--sae", sae_args.sae, "SAE checkpoint")->required();
  sae_eval->add_option("--model", sae_args.model, "toy-model checkpoint");
  sae_eval->add_option("--activations", sae_args.activations, "activation dump");
  sae_eval->add_option("--standardization", sae_args.standardization,
                       "statistics JSON (default: next to the SAE)");
  sae_eval->add_option("--density", sae_args.density, "input density when sampling activations");
  auto* l0 = app.add_subcommand("l0-ratio", "SAE L0 on attacked vs clean activations");
  l0->add_option("--sae", sae_args.sae, "SAE checkpoint")->required();
  l0->add_option("--model", sae_args.model, "toy-model checkpoint")->required();
  l0->add_option("--standardization", sae_args.standardization,
                 "statistics JSON (default: next to the SAE)");
  l0->add_option("--density", sae_args.density, "input density");

  std::string sweep_dir;
  std::vector<double> select;
  auto* report = app.add_subcommand("report", "superposition number line from a paired sweep");
  report->add_option("--sweep", sweep_dir, "paired-sweep output directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  report->add_option("--select", select, "densities that get embedded graphs")->delimiter(',');

  auto* config = app.add_subcommand("config", "inspect configuration");
  config->require_subcommand(1);
  auto* print_defaults =
      config->add_subcommand("print-defaults", "print the effective config as YAML");
  auto* hash = config->add_subcommand("hash", "print the run hash of the effective config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersionString << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (*train) return cmd_train(g, density, false, out, err);
    if (*advtrain) return cmd_train(g, density, true, out, err);
    if (*attack) return cmd_attack(g, attack_args, out);
    if (*sweep) return cmd_sweep(g, count, false, out, err);
    if (*paired) return cmd_sweep(g, count, true, out, err);
    if (*graph) return cmd_graph(g, graph_args, out);
    if (*sae_train) return cmd_sae_train(g, sae_args, out, err);
    if (*sae_eval) return cmd_sae_eval(g, sae_args, out);
    if (*l0) return cmd_l0_ratio(g, sae_args, out);
    if (*report) return cmd_report(g, sweep_dir, select, out);
    if (*print_defaults) {
      out << to_yaml(effective_config(g));
      return kExitOk;
    }
    if (*hash) {
      out << run_hash(effective_config(g)) << '\n';
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace splab::cli
