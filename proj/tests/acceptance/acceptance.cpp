// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.
//
// Training runs at a reduced scale (see kScale below) so the whole binary
// finishes in well under an hour on one core. Set SPLAB_THREADS to use more.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "../unit/support.hpp"
#include "splab/attacks.hpp"
#include "splab/experiments.hpp"
#include "splab/io.hpp"
#include "splab/metrics.hpp"
#include "splab/sae.hpp"
#include "splab/stats.hpp"
#include "splab/training.hpp"

namespace fs = std::filesystem;
using namespace splab;
using splab::testing::kink_margin;
using splab::testing::naive_example_loss;
using splab::testing::naive_loss;
using splab::testing::random_inputs;
using splab::testing::random_model;
using splab::testing::rel_error;

namespace {

struct Scale {
  std::size_t steps = 4000;
  std::size_t batch = 256;
  double lr = 3e-3;
  std::size_t eval_batch = 2048;
  std::size_t sae_steps = 3000;
  std::size_t sae_batch = 256;
  double sae_lr = 5e-3;
  std::size_t sae_train_samples = 16384;
  std::size_t sae_test_samples = 4096;
};
constexpr Scale kScale{};

constexpr std::size_t kN = 100;
constexpr std::size_t kM = 20;
constexpr double kSparseDensity = 0.1;  // last point of the default grid
constexpr std::size_t kTopK = 5;
constexpr double kL1Lambda = 0.01;

std::size_t threads() {
  if (const char* env = std::getenv("SPLAB_THREADS")) return std::strtoul(env, nullptr, 10);
  return 1;
}

void progress(const std::string& s) {
  std::fprintf(stderr, "  %s\n", s.c_str());
  std::fflush(stderr);
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

TrainConfig standard_config() {
  TrainConfig c = TrainConfig::standard_defaults();
  c.steps = kScale.steps;
  c.batch_size = kScale.batch;
  c.learning_rate = kScale.lr;
  c.log_every = 1u << 30;
  return c;
}

TrainConfig adversarial_config() {
  TrainConfig c = TrainConfig::adversarial_defaults();
  c.steps = kScale.steps;
  c.batch_size = kScale.batch;
  c.learning_rate = kScale.lr;
  c.log_every = 1u << 30;
  return c;
}

SweepSpec sweep_spec(std::uint64_t seed, bool paired) {
  SweepSpec s;
  s.densities = log_spaced_densities(30);
  s.n_features = kN;
  s.n_hidden = kM;
  s.standard = standard_config();
  if (paired) s.adversarial = adversarial_config();
  s.eval_batch_size = kScale.eval_batch;
  s.master_seed = seed;
  s.threads = threads();
  return s;
}

std::vector<const SweepRow*> standard_rows(const SweepResult& r) {
  std::vector<const SweepRow*> out;
  for (const auto& row : r.rows)
    if (!row.trained_robust) out.push_back(&row);
  return out;
}

// ---------------------------------------------------------------------------

void gradient_correctness() {
  Rng rng(101);
  const double h = 1e-6;
  int checked = 0, ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 400 && checked < 25; ++trial) {
    const ToyModel model = random_model(12, 4, rng);
    const Matrix x = random_inputs(6, 12, rng);
    if (kink_margin(model, x) < 1e3 * h) continue;
    ++checked;
    const ModelGradients g = grad_params(model, x);
    std::vector<double> fd_w(model.W.size()), fd_b(model.b.size());
    for (std::size_t k = 0; k < model.W.size(); ++k) {
      ToyModel p = model, q = model;
      p.W.data()[k] += h;
      q.W.data()[k] -= h;
      fd_w[k] = (naive_loss(p, x) - naive_loss(q, x)) / (2 * h);
    }
    for (std::size_t k = 0; k < model.b.size(); ++k) {
      ToyModel p = model, q = model;
      p.b[k] += h;
      q.b[k] -= h;
      fd_b[k] = (naive_loss(p, x) - naive_loss(q, x)) / (2 * h);
    }
    const Vector x0 = testing::to_vector(x.row(0));
    const Vector gi = grad_input(model, x0);
    const Vector fd_i = finite_diff_grad(
        [&](const Vector& v) { return naive_example_loss(model, v.span()); }, x0, h);
    const double e = std::max({rel_error(g.dW.span(), fd_w), rel_error(g.db.span(), fd_b),
                               rel_error(gi.span(), fd_i.span())});
    worst = std::max(worst, e);
    ok += e < 1e-5;
  }
  report(1, checked >= 20 && ok == checked,
         fmt("%d/%d kink-free instances, worst relative error %.2e (< 1e-5)", ok, checked, worst));
}

void phase_diagram(const std::vector<const SweepResult*>& sweeps) {
  int passing = 0;
  std::string detail;
  int seed = 0;
  for (const SweepResult* r : sweeps) {
    ++seed;
    const auto rows = standard_rows(*r);
    const double dense = rows.front()->features_per_dimension;
    std::size_t run = 0, best_run = 0;
    double peak = 0.0;
    for (const SweepRow* row : rows) {
      const bool in_band = row->features_per_dimension >= 1.8 && row->features_per_dimension <= 2.2;
      run = in_band ? run + 1 : 0;
      best_run = std::max(best_run, run);
      if (row->density <= 0.15) peak = std::max(peak, row->features_per_dimension);
    }
    const bool pass = dense <= 1.05 && best_run >= 3 && peak > 3.0;
    passing += pass;
    detail += fmt("[seed %d: dense %.3f, plateau %zu, max %.2f] ", seed, dense, best_run, peak);
  }
  report(2, passing >= 2, fmt("%d/%zu seeds: ", passing, sweeps.size()) + detail);
}

double sweep_pearson(const SweepResult& r) {
  std::vector<double> fpd, rv;
  for (const SweepRow* row : standard_rows(r)) {
    fpd.push_back(row->features_per_dimension);
    rv.push_back(row->relative_vulnerability);
  }
  return stats::pearson(fpd, rv);
}

void correlation(const SweepResult& gradient, const SweepResult& elhage) {
  const double rg = sweep_pearson(gradient);
  const double re = sweep_pearson(elhage);
  report(3, rg >= 0.9 && re >= 0.9,
         fmt("pearson(fpd, relative vulnerability): gradient %.3f, elhage %.3f (>= 0.9)", rg, re));
}

void robustness_reduces_superposition(const std::vector<PairRow>& pairs) {
  std::size_t eligible = 0, lower = 0, higher = 0;
  double total = 0.0;
  for (const auto& p : pairs) {
    if (p.standard.features_per_dimension <= 1.2) continue;
    ++eligible;
    const double d = p.standard.features_per_dimension - p.robust.features_per_dimension;
    total += d;
    lower += d > 0.0;
    higher += d < 0.0;
  }
  const double frac = eligible ? static_cast<double>(lower) / eligible : 0.0;
  const double mean = eligible ? total / eligible : 0.0;
  const double p = stats::sign_test_p(lower, higher);
  report(4, eligible > 0 && frac >= 0.7 && mean > 0.0 && p < 0.05,
         fmt("%zu/%zu pairs lower (%.0f%%), mean reduction %.3f, sign test p %.2e", lower,
             eligible, 100.0 * frac, mean, p));
}

void interference_contrast(const std::vector<PairRow>& pairs) {
  double best = 0.0, at = 0.0, documented = NAN;
  for (const auto& p : pairs) {
    if (std::isfinite(p.offdiag_ratio) && p.offdiag_ratio > best) {
      best = p.offdiag_ratio;
      at = p.density;
    }
    if (std::abs(p.density - kSparseDensity) < 1e-12) documented = p.offdiag_ratio;
  }
  report(5, documented > 1.5,
         fmt("offdiag ratio at density %.2f: %.3f (> 1.5); best over sweep %.3f at %.3f",
             kSparseDensity, documented, best, at));
}

void attack_validity() {
  Rng rng(606);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const ToyModel model = random_model(40, 8, rng);
    const FeatureBatch batch = sample_batch(rng, 128, 40, 0.2);
    for (auto variant : {AttackVariant::GradientOneStep, AttackVariant::ElhageAnalytic,
                         AttackVariant::RandomBaseline})
      for (auto scope : {EpsilonScope::MeanInputNorm, EpsilonScope::PerExampleNorm}) {
        AttackConfig cfg;
        cfg.variant = variant;
        cfg.scope = scope;
        const AttackOutcome out = attack_batch(model, batch, cfg, rng.substream(t));
        const double mean_radius = resolve_epsilon(batch, cfg.epsilon_fraction);
        for (std::size_t i = 0; i < batch.batch_size(); ++i) {
          const double eps = scope == EpsilonScope::PerExampleNorm
                                 ? cfg.epsilon_fraction * norm2(batch.data.row(i))
                                 : mean_radius;
          if (eps > 0.0) worst = std::max(worst, out.perturbation_norms[i] / eps - 1.0);
        }
      }
  }
  int wins = 0;
  for (int t = 0; t < 100; ++t) {
    const ToyModel model = random_model(20, 5, rng);
    const FeatureBatch batch = sample_batch(rng, 64, 20, 0.2);
    AttackConfig g;
    AttackConfig r;
    r.variant = AttackVariant::RandomBaseline;
    const double eps = resolve_epsilon(batch, 0.1);
    const double grad = attack_batch_with_epsilon(model, batch, g, eps, rng.substream(1000 + t)).adv_loss;
    const double rand = attack_batch_with_epsilon(model, batch, r, eps, rng.substream(2000 + t)).adv_loss;
    wins += grad > rand;
  }
  report(6, worst <= 1e-9 && wins >= 95,
         fmt("max norm excess %.1e relative (<= 1e-9); gradient beats random on %d/100 models",
             worst, wins));
}

void elhage_optimality() {
  Rng rng(707);
  int exact = 0;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 6;
    const ToyModel model = random_model(n, 3, rng);
    const FeatureBatch one = sample_batch(rng, 1, n, 0.5);
    const Vector x = testing::to_vector(one.data.row(0));
    const double eps = 0.05 + 0.4 * rng.uniform();
    const Matrix g = gram(model.W);
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double nrm = norm2(g.row(i));
      if (nrm == 0.0) continue;
      for (double sign : {1.0, -1.0}) {
        Vector c = x;
        for (std::size_t j = 0; j < n; ++j) c[j] += sign * eps * g(i, j) / nrm;
        best = std::max(best, naive_example_loss(model, c.span()));
      }
    }
    const double got = example_loss(model, elhage_analytic_attack(model, x, eps));
    const double err = std::abs(got - best) / std::max(best, 1e-300);
    worst = std::max(worst, err);
    exact += err < 1e-12;
  }
  report(7, exact == 100, fmt("%d/100 instances equal the 2n-candidate maximum (worst rel %.1e)",
                              exact, worst));
}

void sae_contracts() {
  Rng rng(808);
  const ToyModel toy = random_model(30, 10, rng);
  const ActivationDataset raw = collect_activations(toy, sample_batch(rng, 2048, 30, 0.3));
  const ActivationDataset ds = standardize(raw);

  double round_trip = 0.0;
  const ActivationDataset back = destandardize(ds);
  for (std::size_t k = 0; k < raw.data.size(); ++k)
    round_trip = std::max(round_trip, std::abs(back.data.data()[k] - raw.data.data()[k]));

  std::size_t max_l0 = 0;
  const std::size_t k = 3;
  SaeTrainConfig topk;
  topk.variant = TopKParams{k, 512, 1.0};
  topk.expansion_factor = 4;
  topk.steps = 300;
  topk.batch_size = 128;
  topk.learning_rate = 5e-3;
  const SaeModel sae_k = train_sae(ds, topk);
  for (std::size_t r = 0; r < ds.n_samples(); ++r) {
    const Vector z = sae_encode(sae_k, testing::to_vector(ds.data.row(r)));
    max_l0 = std::max<std::size_t>(max_l0, std::count_if(z.begin(), z.end(), [](double v) { return v != 0.0; }));
  }

  SaeTrainConfig l1 = topk;
  l1.variant = L1Params{1e-2};
  const SaeModel sae_l1 = train_sae(ds, l1);
  double col_err = 0.0;
  for (std::size_t j = 0; j < sae_l1.dict_size; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < sae_l1.input_dim; ++i) s += sae_l1.W_dec(i, j) * sae_l1.W_dec(i, j);
    col_err = std::max(col_err, std::abs(std::sqrt(s) - 1.0));
  }
  report(8, max_l0 <= k && col_err <= 1e-6 && round_trip < 1e-9,
         fmt("TopK max L0 %zu (<= %zu); L1 decoder norm error %.1e; standardize round trip %.1e",
             max_l0, k, col_err, round_trip));
}

SaeTrainConfig sae_config(SaeVariant v, std::uint64_t seed) {
  SaeTrainConfig c;
  c.variant = v;
  c.steps = kScale.sae_steps;
  c.batch_size = kScale.sae_batch;
  c.learning_rate = kScale.sae_lr;
  c.seed = seed;
  c.log_every = 1u << 30;
  return c;
}

void l0_inflation(const ToyModel& model, std::uint64_t seed) {
  Rng rng = Rng(seed).substream(90);
  const FeatureBatch train = sample_batch(rng, kScale.sae_train_samples, kN, kSparseDensity);
  const FeatureBatch test = sample_batch(rng, kScale.sae_test_samples, kN, kSparseDensity);
  const ActivationDataset tr = standardize(collect_activations(model, train));
  const SaeModel sae = train_sae(tr, sae_config(L1Params{kL1Lambda}, seed));
  const ActivationDataset clean = apply_standardization(collect_activations(model, test), *tr.standardization);
  auto ratio_at = [&](double fraction) {
    AttackConfig a = default_eval_attack();
    a.epsilon_fraction = fraction;
    const Matrix adv = perturb_inputs(model, test.data, a, Rng(seed).substream(91));
    return l0_ratio(sae, clean,
                    apply_standardization(collect_activations(model, adv, "adversarial"),
                                          *tr.standardization));
  };
  const double ratio = ratio_at(default_eval_attack().epsilon_fraction);
  const double big = ratio_at(1.0);
  report(9, ratio > 1.0,
         fmt("density %.2f L1 SAE (lambda %.0e, clean L0 %.1f): adversarial/clean L0 %.3f (> 1); "
             "at epsilon fraction 1.0: %.3f",
             kSparseDensity, kL1Lambda, eval_sae(sae, clean).mean_l0, ratio, big));
}

double topk_mse(const ToyModel& model, std::uint64_t seed) {
  Rng rng = Rng(seed).substream(100);
  const FeatureBatch train = sample_batch(rng, kScale.sae_train_samples, kN, kSparseDensity);
  const FeatureBatch test = sample_batch(rng, kScale.sae_test_samples, kN, kSparseDensity);
  const ActivationDataset tr = standardize(collect_activations(model, train));
  const SaeModel sae = train_sae(tr, sae_config(TopKParams{kTopK, 512, 1.0}, seed));
  return eval_sae(sae, apply_standardization(collect_activations(model, test), *tr.standardization)).mse;
}

void robust_reconstruction(const std::vector<std::pair<ToyModel, ToyModel>>& pairs) {
  int wins = 0;
  std::string detail;
  for (std::size_t s = 0; s < pairs.size(); ++s) {
    const double a = topk_mse(pairs[s].first, 1 + s);
    const double b = topk_mse(pairs[s].second, 1 + s);
    wins += b < a;
    detail += fmt("[%.4f vs %.4f] ", b, a);
  }
  report(10, wins >= 2,
         fmt("TopK k=%zu at density %.2f, robust < non-robust MSE on %d/%zu seeds ", kTopK,
             kSparseDensity, wins, pairs.size()) +
             detail);
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".splb") continue;
    const auto bytes = read_file(e.path());
    out[fs::relative(e.path(), dir).string()] = std::string(bytes.begin(), bytes.end());
  }
  return out;
}

void determinism(const fs::path& scratch) {
  std::map<std::string, std::string> runs[2];
  for (int i = 0; i < 2; ++i) {
    SweepSpec s = sweep_spec(17, true);
    s.densities = log_spaced_densities(4, 1.0, 0.2);
    s.standard.steps = 300;
    s.adversarial->steps = 300;
    s.eval_batch_size = 512;
    s.threads = i == 0 ? 1 : std::max<std::size_t>(2, threads());
    s.out_dir = scratch / ("determinism_" + std::to_string(i));
    fs::remove_all(*s.out_dir);
    run_paired_robustness_experiment(s);
    runs[i] = artifacts(*s.out_dir);
  }
  report(11, !runs[0].empty() && runs[0] == runs[1],
         fmt("%zu CSV tables and checkpoints compared byte for byte (1 vs %zu threads)", runs[0].size(),
             std::max<std::size_t>(2, threads())));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path scratch = fs::temp_directory_path() / "splab_acceptance";
  fs::create_directories(scratch);

  gradient_correctness();

  progress("paired sweep, seed 1");
  const PairedResult paired = run_paired_robustness_experiment(sweep_spec(1, true), progress);
  std::vector<SweepResult> extra;
  for (std::uint64_t seed : {2, 3}) {
    progress("standard sweep, seed " + std::to_string(seed));
    extra.push_back(run_sweep(sweep_spec(seed, false)));
  }
  phase_diagram({&paired.sweep, &extra[0], &extra[1]});

  progress("standard sweep, seed 1, elhage evaluation");
  SweepSpec elhage = sweep_spec(1, false);
  elhage.eval_attack.variant = AttackVariant::ElhageAnalytic;
  correlation(paired.sweep, run_sweep(elhage));

  robustness_reduces_superposition(paired.pairs);
  interference_contrast(paired.pairs);
  attack_validity();
  elhage_optimality();
  sae_contracts();

  const std::size_t sparse_index = log_spaced_densities(30).size() - 1;
  const auto std_row = paired.sweep.find(kSparseDensity, false);
  const auto rob_row = paired.sweep.find(kSparseDensity, true);
  if (!std_row || !rob_row) {
    report(9, false, "sparse pair missing from the sweep");
    report(10, false, "sparse pair missing from the sweep");
  } else {
    l0_inflation(paired.sweep.models[*std_row], 1);
    std::vector<std::pair<ToyModel, ToyModel>> models{
        {paired.sweep.models[*std_row], paired.sweep.models[*rob_row]}};
    for (std::size_t s = 0; s < 2; ++s) {
      const SweepResult& r = extra[s];
      const ToyModel standard = r.models[*r.find(kSparseDensity, false)];
      const std::uint64_t seed = derive_seed(2 + s, sparse_index);
      TrainConfig cfg = adversarial_config();
      cfg.seed = seed;
      progress("robust model at the sparse density, seed " + std::to_string(2 + s));
      models.emplace_back(standard, train_adversarial(cfg, kN, kM, kSparseDensity, Rng(seed)).first);
    }
    robust_reconstruction(models);
  }

  determinism(scratch);
  fs::remove_all(scratch);

  std::printf("informational: offdiag ratios along the paired sweep:");
  for (const auto& p : paired.pairs) std::printf(" %.3f@%.3f", p.offdiag_ratio, p.density);
  std::printf("\n%d criteria failed, %.0f s\n", failures,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return failures == 0 ? 0 : 1;
}
