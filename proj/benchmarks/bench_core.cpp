#include <benchmark/benchmark.h>

#include "splab/attacks.hpp"
#include "splab/metrics.hpp"
#include "splab/sae.hpp"
#include "splab/toymodel.hpp"

namespace {

using namespace splab;

ToyModel make_model(std::size_t n, std::size_t m) {
  Rng rng(1);
  ToyModel model(n, m);
  for (double& w : model.W.span()) w = rng.gaussian(0.0, 0.3);
  return model;
}

FeatureBatch make_batch(std::size_t rows, std::size_t n, double density) {
  Rng rng(2);
  return sample_batch(rng, rows, n, density);
}

void BM_Loss(benchmark::State& state) {
  const ToyModel model = make_model(100, 20);
  const FeatureBatch batch = make_batch(state.range(0), 100, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(loss(model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Loss)->Arg(256)->Arg(4096);

void BM_GradParams(benchmark::State& state) {
  const ToyModel model = make_model(100, 20);
  const FeatureBatch batch = make_batch(state.range(0), 100, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(grad_params(model, batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GradParams)->Arg(256)->Arg(4096);

void BM_Attack(benchmark::State& state) {
  const ToyModel model = make_model(100, 20);
  const FeatureBatch batch = make_batch(1024, 100, 0.1);
  AttackConfig cfg;
  cfg.variant = static_cast<AttackVariant>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(attack_batch(model, batch, cfg, Rng(3)));
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_Attack)
    ->Arg(static_cast<int>(AttackVariant::GradientOneStep))
    ->Arg(static_cast<int>(AttackVariant::ElhageAnalytic));

void BM_InterferenceMatrix(benchmark::State& state) {
  const ToyModel model = make_model(state.range(0), 20);
  for (auto _ : state) benchmark::DoNotOptimize(interference_matrix(model));
}
BENCHMARK(BM_InterferenceMatrix)->Arg(100)->Arg(400);

void BM_SaeEncodeTopK(benchmark::State& state) {
  SaeModel sae = make_sae(20, 160, TopKParams{8, 80, 1.0});
  Rng rng(4);
  for (double& w : sae.W_enc.span()) w = rng.gaussian(0.0, 0.2);
  Vector x(20);
  for (double& v : x) v = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(sae_encode(sae, x));
}
BENCHMARK(BM_SaeEncodeTopK);

}  // namespace

BENCHMARK_MAIN();
