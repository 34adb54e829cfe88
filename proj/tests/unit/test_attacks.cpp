#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "splab/attacks.hpp"
#include "support.hpp"

namespace splab {
namespace {

using testing::random_model;

// Sparse input with every active value kept away from zero.
Vector sparse_input(std::size_t n, double density, Rng& rng) {
  Vector x(n);
  for (auto& v : x)
    if (rng.uniform() < density) v = 0.2 + 0.8 * rng.uniform();
  if (norm2(x.span()) == 0.0) x[0] = 0.5;
  return x;
}

// Deterministic near-uniform directions on the 2-sphere.
std::vector<Vector> fibonacci_sphere(std::size_t count) {
  std::vector<Vector> dirs;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < count; ++i) {
    const double y = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const double r = std::sqrt(1.0 - y * y);
    const double t = golden * static_cast<double>(i);
    dirs.push_back(Vector{r * std::cos(t), y, r * std::sin(t)});
  }
  return dirs;
}

double distance(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

TEST(AttackConfig, Validation) {
  AttackConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epsilon_fraction = -0.1;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = {};
  cfg.noise_scale = -1.0;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(AttackConfig, NamesRoundTrip) {
  for (auto v : {AttackVariant::GradientOneStep, AttackVariant::ElhageAnalytic,
                 AttackVariant::RandomBaseline})
    EXPECT_EQ(parse_attack_variant(to_string(v)), v);
  for (auto s : {EpsilonScope::MeanInputNorm, EpsilonScope::PerExampleNorm})
    EXPECT_EQ(parse_epsilon_scope(to_string(s)), s);
  for (auto s : {VulnerabilityStat::AdversarialLoss, VulnerabilityStat::ExcessLoss,
                 VulnerabilityStat::LossRatio})
    EXPECT_EQ(parse_vulnerability_stat(to_string(s)), s);
  EXPECT_THROW(parse_attack_variant("pgd"), ContractError);
}

TEST(ResolveEpsilon, Examples) {
  EXPECT_EQ(resolve_epsilon(Matrix(5, 4), 0.1), 0.0);
  EXPECT_DOUBLE_EQ(resolve_epsilon(Matrix{{1, 0}, {0, 1}, {0.6, 0.8}}, 0.1), 0.1);
  EXPECT_THROW(resolve_epsilon(Matrix(0, 3), 0.1), ContractError);
}

// Independent sampler (std::mt19937) for E‖x‖₂ at density d.
TEST(ResolveEpsilon, MatchesMonteCarloMeanNorm) {
  for (double d : {0.1, 0.5, 1.0}) {
    std::mt19937_64 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double total = 0.0;
    const int samples = 200000;
    for (int s = 0; s < samples; ++s) {
      double sq = 0.0;
      for (int j = 0; j < 100; ++j)
        if (u(gen) < d) {
          const double v = u(gen);
          sq += v * v;
        }
      total += std::sqrt(sq);
    }
    const double expected = 0.1 * total / samples;
    Rng rng(3);
    const FeatureBatch batch = sample_batch(rng, 20000, 100, d);
    EXPECT_NEAR(resolve_epsilon(batch, 0.1), expected, 0.01 * expected) << "density " << d;
  }
}

TEST(GradientAttack, ZeroEpsilonIsIdentity) {
  Rng rng(1);
  const ToyModel model = random_model(6, 2, rng);
  const Vector x{0.1, 0.2, 0, 0, 0.5, 0.9};
  EXPECT_EQ(gradient_l2_attack(model, x, 0.0, 1e-3, rng), x);
  EXPECT_THROW(gradient_l2_attack(model, x, -1.0, 0.0, rng), ContractError);
}

TEST(GradientAttack, NormEqualsEpsilon) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const ToyModel model = random_model(12, 4, rng);
    const Vector x = sparse_input(12, 0.3, rng);
    const Vector adv = gradient_l2_attack(model, x, 0.3, 1e-3, rng);
    EXPECT_NEAR(distance(adv, x), 0.3, 1e-9);
  }
}

TEST(GradientAttack, ZeroGradientLeavesInputUnchanged) {
  const ToyModel identity(Matrix::identity(3), Vector(3));
  Rng rng(3);
  const Vector x{0.3, 0.5, 0.7};
  EXPECT_EQ(gradient_l2_attack(identity, x, 0.1, 0.0, rng), x);
}

TEST(GradientAttack, NoiselessStepFollowsGradient) {
  Rng rng(4);
  const ToyModel model = random_model(8, 3, rng);
  const Vector x = sparse_input(8, 0.5, rng);
  const Vector g = grad_input(model, x);
  const Vector adv = gradient_l2_attack(model, x, 0.2, 0.0, rng);
  const double gn = norm2(g.span());
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(adv[i] - x[i], 0.2 * g[i] / gn, 1e-12);
}

// n=3, m=1: no direction from a dense grid over the ε-sphere does more than
// 5% better than the one-step attack.
TEST(GradientAttack, NearOptimalAgainstSphereGrid) {
  const auto dirs = fibonacci_sphere(10000);
  Rng rng(5);
  int checked = 0;
  for (int trial = 0; trial < 1000 && checked < 25; ++trial) {
    const ToyModel model = random_model(3, 1, rng, 0.8);
    Vector x(3);
    for (auto& v : x) v = 0.2 + 0.8 * rng.uniform();
    const double eps = 0.02 * norm2(x.span());
    Matrix xm(1, 3);
    std::copy(x.begin(), x.end(), xm.row(0).begin());
    // ‖WᵀWδ‖ ≤ ‖W‖²_F ε keeps the whole ε-ball inside one ReLU region.
    if (testing::kink_margin(model, xm) < 1.01 * eps * frobenius_sq(model.W)) continue;
    ++checked;
    const double attack = example_loss(model, gradient_l2_attack(model, x, eps, 0.0, rng));
    double grid_best = 0.0;
    for (const Vector& u : dirs) {
      Vector cand = x;
      for (std::size_t i = 0; i < 3; ++i) cand[i] += eps * u[i];
      grid_best = std::max(grid_best, example_loss(model, cand));
    }
    EXPECT_GE(attack, 0.95 * grid_best) << "trial " << trial;
  }
  EXPECT_GE(checked, 10);
}

TEST(ElhageAttack, ZeroWeightsReturnInput) {
  const ToyModel model(4, 2);
  const Vector x{0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(elhage_analytic_attack(model, x, 0.5), x);
}

TEST(ElhageAttack, SingleFeatureDirection) {
  // Only feature 1 is embedded, so every usable candidate lies along e_1.
  Matrix w(2, 3);
  w(0, 1) = 1.0;
  const ToyModel model(w, Vector(3));
  const Vector x{0.5, 0.5, 0.5};
  const Vector adv = elhage_analytic_attack(model, x, 0.2);
  EXPECT_DOUBLE_EQ(adv[0], 0.5);
  EXPECT_DOUBLE_EQ(adv[2], 0.5);
  EXPECT_NEAR(std::abs(adv[1] - 0.5), 0.2, 1e-15);
}

// n=4, m=2: the returned loss is the maximum over the 8 signed candidates.
TEST(ElhageAttack, MatchesCandidateEnumeration) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const ToyModel model = random_model(4, 2, rng);
    const Vector x = sparse_input(4, 0.6, rng);
    const double eps = 0.1 + 0.3 * rng.uniform();
    const Matrix g = gram(model.W);
    double best = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double nrm = norm2(g.row(i));
      for (double sign : {1.0, -1.0}) {
        Vector c = x;
        for (std::size_t j = 0; j < 4; ++j) c[j] += sign * eps * g(i, j) / nrm;
        best = std::max(best, testing::naive_example_loss(model, c.span()));
      }
    }
    const Vector adv = elhage_analytic_attack(model, x, eps);
    EXPECT_NEAR(example_loss(model, adv), best, 1e-12);
    EXPECT_NEAR(distance(adv, x), eps, 1e-12);
  }
}

TEST(RandomAttack, NormAndZero) {
  Rng rng(7);
  const Vector x{0.3, 0.0, 0.4};
  EXPECT_EQ(random_baseline_attack(x, 0.0, rng), x);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(distance(random_baseline_attack(x, 0.25, rng), x), 0.25, 1e-12);
}

TEST(RandomAttack, GradientBeatsRandomOnAlmostAllModels) {
  Rng rng(8);
  int wins = 0;
  const int models = 100;
  for (int t = 0; t < models; ++t) {
    const ToyModel model = random_model(20, 5, rng);
    const Vector x = sparse_input(20, 0.2, rng);
    const double eps = 0.1 * norm2(x.span());
    const double grad = example_loss(model, gradient_l2_attack(model, x, eps, 1e-3, rng));
    double mean_random = 0.0;
    for (int k = 0; k < 1000; ++k)
      mean_random += example_loss(model, random_baseline_attack(x, eps, rng)) / 1000.0;
    wins += mean_random <= grad;
  }
  EXPECT_GE(wins, 95);
}

class AllVariants : public ::testing::TestWithParam<AttackVariant> {};

TEST_P(AllVariants, PerturbationNeverExceedsEpsilon) {
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const ToyModel model = random_model(30, 6, rng);
    const FeatureBatch batch = sample_batch(rng, 64, 30, 0.2);
    for (auto scope : {EpsilonScope::MeanInputNorm, EpsilonScope::PerExampleNorm}) {
      AttackConfig cfg;
      cfg.variant = GetParam();
      cfg.scope = scope;
      const AttackOutcome out = attack_batch(model, batch, cfg, rng.substream(trial));
      EXPECT_GE(out.adv_loss, 0.0);
      for (std::size_t i = 0; i < batch.batch_size(); ++i) {
        const double bound = scope == EpsilonScope::PerExampleNorm
                                 ? 0.1 * norm2(batch.data.row(i))
                                 : resolve_epsilon(batch, 0.1);
        EXPECT_LE(out.perturbation_norms[i], bound * (1 + 1e-9));
      }
    }
  }
}

TEST_P(AllVariants, ZeroEpsilonGivesCleanLoss) {
  Rng rng(10);
  const ToyModel model = random_model(10, 3, rng);
  const FeatureBatch batch = sample_batch(rng, 32, 10, 0.5);
  AttackConfig cfg;
  cfg.variant = GetParam();
  cfg.epsilon_fraction = 0.0;
  EXPECT_DOUBLE_EQ(vulnerability(model, batch, cfg, rng), loss(model, batch));
}

TEST_P(AllVariants, PerturbInputsMatchesAttackBatch) {
  Rng rng(11);
  const ToyModel model = random_model(10, 3, rng);
  const FeatureBatch batch = sample_batch(rng, 16, 10, 0.5);
  AttackConfig cfg;
  cfg.variant = GetParam();
  const Rng arng(12);
  EXPECT_EQ(perturb_inputs(model, batch.data, cfg, arng), attack_batch(model, batch, cfg, arng).x_adv.data);
}

INSTANTIATE_TEST_SUITE_P(Attacks, AllVariants,
                         ::testing::Values(AttackVariant::GradientOneStep,
                                           AttackVariant::ElhageAnalytic,
                                           AttackVariant::RandomBaseline));

TEST(AttackBatch, MaskingCounterTracksLosingExamples) {
  Rng rng(13);
  const ToyModel model = random_model(12, 4, rng);
  const FeatureBatch batch = sample_batch(rng, 200, 12, 0.3);
  AttackConfig cfg;
  const Rng arng(14);
  const AttackOutcome out = attack_batch(model, batch, cfg, arng);
  const double eps = resolve_epsilon(batch, cfg.epsilon_fraction);
  std::size_t expected = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    const Vector x = batch.example(i);
    Rng control = arng.substream(i).substream(0x5A17);
    const double rnd = example_loss(model, random_baseline_attack(x, eps, control));
    const double att = example_loss(model, out.x_adv.example(i));
    const double best = std::max({att, rnd, example_loss(model, x)});
    if (best != att) ++expected;
  }
  EXPECT_EQ(out.masking_failures, expected);
}

TEST(AttackBatch, DeterministicForFixedRng) {
  Rng rng(15);
  const ToyModel model = random_model(12, 4, rng);
  const FeatureBatch batch = sample_batch(rng, 50, 12, 0.3);
  const AttackOutcome a = attack_batch(model, batch, AttackConfig{}, Rng(1));
  const AttackOutcome b = attack_batch(model, batch, AttackConfig{}, Rng(1));
  EXPECT_EQ(a.x_adv.data, b.x_adv.data);
  EXPECT_EQ(a.adv_loss, b.adv_loss);
}

TEST(AttackBatch, ShapeMismatchAndEmptyThrow) {
  const ToyModel model(5, 2);
  EXPECT_THROW(attack_batch(model, FeatureBatch{Matrix(0, 5), 1.0}, AttackConfig{}, Rng(1)),
               ContractError);
  EXPECT_THROW(attack_batch(model, FeatureBatch{Matrix(2, 4), 1.0}, AttackConfig{}, Rng(1)),
               ContractError);
}

// Identity model reconstructs any nonnegative input, so the only loss comes
// from coordinates pushed below zero: at most ε² in total.
TEST(Vulnerability, IdentityModelIsQuadraticInEpsilon) {
  const ToyModel identity(Matrix::identity(5), Vector(5));
  Rng rng(16);
  const FeatureBatch batch = sample_batch(rng, 100, 5, 1.0);
  for (double eps : {0.01, 0.05, 0.1}) {
    AttackConfig cfg;
    cfg.variant = AttackVariant::ElhageAnalytic;
    const AttackOutcome out = attack_batch_with_epsilon(identity, batch, cfg, eps, rng);
    EXPECT_LE(out.adv_loss, eps * eps / 5.0 + 1e-15);
  }
}

TEST(Vulnerability, MonotoneInEpsilonForFixedNoise) {
  Rng rng(17);
  const ToyModel model = random_model(20, 5, rng);
  const FeatureBatch batch = sample_batch(rng, 256, 20, 0.3);
  double prev = -1.0;
  for (double f : {0.0, 0.05, 0.1, 0.2}) {
    AttackConfig cfg;
    cfg.epsilon_fraction = f;
    cfg.noise_scale = 0.0;
    const double v = vulnerability(model, batch, cfg, Rng(18));
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(Vulnerability, StatisticsAndRelative) {
  AttackOutcome out;
  out.clean_loss = 0.02;
  out.adv_loss = 0.05;
  EXPECT_DOUBLE_EQ(vulnerability_of(out, VulnerabilityStat::AdversarialLoss), 0.05);
  EXPECT_DOUBLE_EQ(vulnerability_of(out, VulnerabilityStat::ExcessLoss), 0.03);
  EXPECT_DOUBLE_EQ(vulnerability_of(out, VulnerabilityStat::LossRatio), 2.5);
  out.clean_loss = 0.0;
  EXPECT_THROW(vulnerability_of(out, VulnerabilityStat::LossRatio), DegenerateBaselineError);

  EXPECT_DOUBLE_EQ(relative_vulnerability(0.08, 0.02), 4.0);
  EXPECT_DOUBLE_EQ(relative_vulnerability(0.3, 0.3), 1.0);
  EXPECT_THROW(relative_vulnerability(0.1, 0.0), DegenerateBaselineError);
}

}  // namespace
}  // namespace splab
