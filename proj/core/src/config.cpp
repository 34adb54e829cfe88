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

#include "splab/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cstdio>
#include <initializer_list>
#include <set>
#include <sstream>

#include "splab/io.hpp"

namespace splab {

namespace {

void check_keys(const YAML::Node& node, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) throw ConfigError(where + ": expected a mapping");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!ok.count(key))
      throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& where, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for '" + where + "." + key + "'");
  }
}

template <typename Parse, typename T>
void read_enum(const YAML::Node& node, const char* key, const std::string& where, Parse parse,
               T& out) {
  std::string s;
  if (!node[key]) return;
  read(node, key, where, s);
  try {
    out = parse(s);
  } catch (const ContractError& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

void read_attack(const YAML::Node& n, const std::string& where, AttackConfig& a) {
  check_keys(n, where, {"epsilon_fraction", "noise_scale", "variant", "scope", "statistic"});
  read(n, "epsilon_fraction", where, a.epsilon_fraction);
  read(n, "noise_scale", where, a.noise_scale);
  read_enum(n, "variant", where, parse_attack_variant, a.variant);
  read_enum(n, "scope", where, parse_epsilon_scope, a.scope);
  read_enum(n, "statistic", where, parse_vulnerability_stat, a.statistic);
}

void read_adam(const YAML::Node& n, const std::string& where, AdamParams& p) {
  check_keys(n, where, {"beta1", "beta2", "epsilon"});
  read(n, "beta1", where, p.beta1);
  read(n, "beta2", where, p.beta2);
  read(n, "epsilon", where, p.epsilon);
}

void read_train(const YAML::Node& n, const std::string& where, TrainConfig& c, bool adversarial) {
  if (adversarial)
    check_keys(n, where, {"steps", "learning_rate", "batch_size", "optimizer", "adam",
                          "init_stddev", "log_every", "alpha", "attack"});
  else
    check_keys(n, where, {"steps", "learning_rate", "batch_size", "optimizer", "adam",
                          "init_stddev", "log_every"});
  read(n, "steps", where, c.steps);
  read(n, "learning_rate", where, c.learning_rate);
  read(n, "batch_size", where, c.batch_size);
  read_enum(n, "optimizer", where, parse_optimizer, c.optimizer);
  if (n["adam"]) read_adam(n["adam"], where + ".adam", c.adam);
  read(n, "init_stddev", where, c.init_stddev);
  read(n, "log_every", where, c.log_every);
  if (adversarial) {
    read(n, "alpha", where, c.alpha);
    if (n["attack"]) {
      AttackConfig a = c.attack.value_or(AttackConfig{});
      read_attack(n["attack"], where + ".attack", a);
      c.attack = a;
    }
  }
}

void read_sae(const YAML::Node& n, SaeRunConfig& s) {
  const std::string where = "sae";
  check_keys(n, where,
             {"variant", "k", "k_aux", "aux_weight", "lambda", "expansion_factor", "steps",
              "learning_rate", "batch_size", "dead_after", "log_every", "adam", "standardize",
              "n_samples", "density"});
  std::string variant = s.train.variant.index() == 0 ? "topk" : "l1";
  read(n, "variant", where, variant);
  TopKParams topk = std::holds_alternative<TopKParams>(s.train.variant)
                        ? std::get<TopKParams>(s.train.variant)
                        : TopKParams{};
  L1Params l1 = std::holds_alternative<L1Params>(s.train.variant)
                    ? std::get<L1Params>(s.train.variant)
                    : L1Params{};
  read(n, "k", where, topk.k);
  read(n, "k_aux", where, topk.k_aux);
  read(n, "aux_weight", where, topk.aux_weight);
  read(n, "lambda", where, l1.lambda);
  if (variant == "topk")
    s.train.variant = topk;
  else if (variant == "l1")
    s.train.variant = l1;
  else
    throw ConfigError("sae.variant must be 'topk' or 'l1', got '" + variant + "'");
  read(n, "expansion_factor", where, s.train.expansion_factor);
  read(n, "steps", where, s.train.steps);
  read(n, "learning_rate", where, s.train.learning_rate);
  read(n, "batch_size", where, s.train.batch_size);
  read(n, "dead_after", where, s.train.dead_after);
  read(n, "log_every", where, s.train.log_every);
  if (n["adam"]) read_adam(n["adam"], where + ".adam", s.train.adam);
  read_enum(n, "standardize", where, parse_standardize_mode, s.standardize);
  read(n, "n_samples", where, s.n_samples);
  read(n, "density", where, s.density);
}

std::string f(double v) { return format_double(v); }

void emit_attack(std::ostringstream& o, const AttackConfig& a, const std::string& indent) {
  o << indent << "epsilon_fraction: " << f(a.epsilon_fraction) << '\n'
    << indent << "noise_scale: " << f(a.noise_scale) << '\n'
    << indent << "variant: " << to_string(a.variant) << "        # gradient | elhage | random\n"
    << indent << "scope: " << to_string(a.scope) << "        # mean-norm | per-example\n"
    << indent << "statistic: " << to_string(a.statistic) << "    # adversarial | excess | ratio\n";
}

void emit_train(std::ostringstream& o, const TrainConfig& c, bool adversarial) {
  o << "  steps: " << c.steps << '\n'
    << "  learning_rate: " << f(c.learning_rate) << '\n'
    << "  batch_size: " << c.batch_size << '\n'
    << "  optimizer: " << to_string(c.optimizer) << "    # adam | sgd\n"
    << "  adam:\n"
    << "    beta1: " << f(c.adam.beta1) << '\n'
    << "    beta2: " << f(c.adam.beta2) << '\n'
    << "    epsilon: " << f(c.adam.epsilon) << '\n'
    << "  init_stddev: " << f(c.init_stddev) << "    # 0 = 1/sqrt(n_hidden)\n"
    << "  log_every: " << c.log_every << '\n';
  if (adversarial) {
    o << "  alpha: " << f(c.alpha) << '\n';
    if (c.attack) {
      o << "  attack:\n";
      emit_attack(o, *c.attack, "    ");
    }
  }
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(StandardizeMode mode) {
  return mode == StandardizeMode::PerDimension ? "per-dimension" : "global";
}

StandardizeMode parse_standardize_mode(std::string_view s) {
  if (s == "per-dimension") return StandardizeMode::PerDimension;
  if (s == "global") return StandardizeMode::GlobalScalar;
  throw ContractError("unknown standardize mode '" + std::string(s) +
                      "' (expected per-dimension or global)");
}

void RunConfig::validate() const {
  try {
    SPLAB_REQUIRE(n_features >= 1 && n_hidden >= 1, "model shape must be positive");
    train.validate();
    SPLAB_REQUIRE(!train.attack, "train must not carry an attack (use adversarial)");
    adversarial.validate();
    SPLAB_REQUIRE(adversarial.attack.has_value(), "adversarial needs an attack block");
    attack.validate();
    sweep_spec(true).validate();
    sae.train.validate();
    SPLAB_REQUIRE(sae.n_samples >= 2, "sae.n_samples must be at least 2");
    SPLAB_REQUIRE(sae.density > 0.0 && sae.density <= 1.0, "sae.density must lie in (0, 1]");
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

std::vector<double> RunConfig::density_grid() const {
  if (!densities.empty()) return densities;
  return log_spaced_densities(density_count, density_high, density_low);
}

SweepSpec RunConfig::sweep_spec(bool paired) const {
  SweepSpec s;
  s.densities = density_grid();
  s.n_features = n_features;
  s.n_hidden = n_hidden;
  s.standard = train;
  if (paired) s.adversarial = adversarial;
  s.eval_attack = attack;
  s.epsilon_reference = epsilon_reference;
  s.eval_batch_size = eval_batch_size;
  s.master_seed = seed;
  s.threads = threads;
  return s;
}

RunConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig cfg;
  if (!root || root.IsNull()) return cfg;
  check_keys(root, "",
             {"seed", "threads", "model", "train", "adversarial", "attack", "sweep", "sae"});
  read(root, "seed", "", cfg.seed);
  read(root, "threads", "", cfg.threads);
  if (const auto m = root["model"]) {
    check_keys(m, "model", {"n_features", "n_hidden"});
    read(m, "n_features", "model", cfg.n_features);
    read(m, "n_hidden", "model", cfg.n_hidden);
  }
  if (root["train"]) read_train(root["train"], "train", cfg.train, false);
  if (root["adversarial"]) read_train(root["adversarial"], "adversarial", cfg.adversarial, true);
  if (root["attack"]) read_attack(root["attack"], "attack", cfg.attack);
  if (const auto s = root["sweep"]) {
    check_keys(s, "sweep", {"densities", "density_high", "density_low", "eval_batch_size",
                            "epsilon_reference"});
    if (const auto d = s["densities"]) {
      if (d.IsSequence())
        read(s, "densities", "sweep", cfg.densities);
      else
        read(s, "densities", "sweep", cfg.density_count);
    }
    read(s, "density_high", "sweep", cfg.density_high);
    read(s, "density_low", "sweep", cfg.density_low);
    read(s, "eval_batch_size", "sweep", cfg.eval_batch_size);
    read_enum(s, "epsilon_reference", "sweep", parse_epsilon_reference, cfg.epsilon_reference);
  }
  if (root["sae"]) read_sae(root["sae"], cfg.sae);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string to_yaml(const RunConfig& cfg) {
  std::ostringstream o;
  o << "seed: " << cfg.seed << '\n';
  o << "threads: " << cfg.threads << "    # 0 = all cores\n";
  o << "model:\n"
    << "  n_features: " << cfg.n_features << '\n'
    << "  n_hidden: " << cfg.n_hidden << '\n';
  o << "train:\n";
  emit_train(o, cfg.train, false);
  o << "adversarial:\n";
  emit_train(o, cfg.adversarial, true);
  o << "attack:\n";
  emit_attack(o, cfg.attack, "  ");
  o << "sweep:\n";
  if (cfg.densities.empty()) {
    o << "  densities: " << cfg.density_count << "    # count, or an explicit list\n";
  } else {
    o << "  densities: [";
    for (std::size_t i = 0; i < cfg.densities.size(); ++i)
      o << (i ? ", " : "") << f(cfg.densities[i]);
    o << "]\n";
  }
  o << "  density_high: " << f(cfg.density_high) << '\n'
    << "  density_low: " << f(cfg.density_low) << '\n'
    << "  eval_batch_size: " << cfg.eval_batch_size << '\n'
    << "  epsilon_reference: " << to_string(cfg.epsilon_reference) << "    # dense | per-density\n";
  const auto& st = cfg.sae.train;
  o << "sae:\n";
  if (const auto* t = std::get_if<TopKParams>(&st.variant)) {
    o << "  variant: topk    # topk | l1\n"
      << "  k: " << t->k << '\n'
      << "  k_aux: " << t->k_aux << '\n'
      << "  aux_weight: " << f(t->aux_weight) << '\n';
  } else {
    o << "  variant: l1    # topk | l1\n"
      << "  lambda: " << f(std::get<L1Params>(st.variant).lambda) << '\n';
  }
  o << "  expansion_factor: " << st.expansion_factor << '\n'
    << "  steps: " << st.steps << '\n'
    << "  learning_rate: " << f(st.learning_rate) << '\n'
    << "  batch_size: " << st.batch_size << '\n'
    << "  dead_after: " << st.dead_after << '\n'
    << "  log_every: " << st.log_every << '\n'
    << "  adam:\n"
    << "    beta1: " << f(st.adam.beta1) << '\n'
    << "    beta2: " << f(st.adam.beta2) << '\n'
    << "    epsilon: " << f(st.adam.epsilon) << '\n'
    << "  standardize: " << to_string(cfg.sae.standardize) << "    # per-dimension | global\n"
    << "  n_samples: " << cfg.sae.n_samples << '\n'
    << "  density: " << f(cfg.sae.density) << '\n';
  return o.str();
}

std::string run_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.threads = 0;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_yaml(c))));
  return buf;
}

}  // namespace splab
