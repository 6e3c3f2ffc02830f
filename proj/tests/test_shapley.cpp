#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "support.hpp"
#include "xferlab/shapley/budget.hpp"
#include "xferlab/shapley/exact.hpp"
#include "xferlab/shapley/explainer.hpp"
#include "xferlab/shapley/kernel.hpp"

using namespace xferlab;
using fixtures::LinearProbeGame;
using fixtures::random_values;
using fixtures::tiny_model;

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

std::vector<double> image_for(const model::ModelConfig& cfg, std::uint64_t seed) {
  auto v = random_values(cfg.image_values(), seed, 0.3);
  for (auto& x : v) x = std::clamp(0.5 + x, 0.0, 1.0);
  return v;
}

model::ParameterVector noisy_theta(const model::ModelConfig& cfg, std::uint64_t seed) {
  auto theta = model::init_parameter_vector(cfg);
  auto noise = random_values(theta.size(), seed, 0.05);
  for (std::size_t i = 0; i < theta.size(); ++i) theta.mutable_values()[i] += noise[i];
  return theta;
}

// Pairwise interactions make the game non-additive.
struct InteractionGame {
  std::vector<double> single;
  double pair = 0.0;
  double operator()(shapley::Bits s) const {
    double v = 0.0;
    for (std::size_t m = 0; m < single.size(); ++m) v += ((s >> m) & 1u) ? single[m] : 0.0;
    if ((s & 1u) && (s & 2u)) v += pair;
    return v + 0.1 * std::popcount(s) * std::popcount(s);
  }
};

}  // namespace

TEST(MaskApply, FullEmptyAndComplement) {
  auto cfg = tiny_model();
  const auto x = image_for(cfg, 1), b = image_for(cfg, 2);
  const auto M = cfg.num_patches();
  EXPECT_EQ(shapley::mask_apply(cfg, x, shapley::CoalitionMask::full(M), b), x);
  EXPECT_EQ(shapley::mask_apply(cfg, x, shapley::CoalitionMask::empty(M), b), b);
  auto mask = shapley::CoalitionMask::from_bits(0b0101, M);
  auto with = shapley::mask_apply(cfg, x, mask, b);
  auto without = shapley::mask_apply(cfg, x, mask.complement(), b);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool from_x = with[i] == x[i] && without[i] == b[i];
    const bool from_b = with[i] == b[i] && without[i] == x[i];
    EXPECT_TRUE(from_x || from_b) << i;
  }
  EXPECT_THROW(shapley::mask_apply(cfg, x, shapley::CoalitionMask::full(M + 1), b), DimensionError);
}

TEST(Value, EndpointsMatchForward) {
  auto cfg = tiny_model();
  auto theta = noisy_theta(cfg, 3);
  auto head = model::make_head({"a", "b"}, cfg.embed_dim, 1);
  const auto x = image_for(cfg, 4), b = image_for(cfg, 5);
  model::InferenceEngine engine(cfg, theta, head);
  const auto M = cfg.num_patches();
  EXPECT_NEAR(shapley::value(cfg, theta, head, x, shapley::CoalitionMask::full(M), b, 1), engine.logit(x, 1), 1e-12);
  EXPECT_NEAR(shapley::value(cfg, theta, head, x, shapley::CoalitionMask::empty(M), b, 1), engine.logit(b, 1), 1e-12);
  EXPECT_THROW(shapley::value(cfg, theta, head, x, shapley::CoalitionMask::full(M), b, 2), IndexError);
}

TEST(Value, ModelGameEqualsMaskedForward) {
  auto cfg = tiny_model(8, 4, 8, 2);
  auto theta = noisy_theta(cfg, 6);
  auto head = model::make_head({"a", "b", "c"}, cfg.embed_dim, 1);
  const auto x = image_for(cfg, 7), b = image_for(cfg, 8);
  model::InferenceEngine engine(cfg, theta, head);
  shapley::ModelGame game(engine, x, b, 2);
  for (shapley::Bits s = 0; s < 16; ++s) {
    const double direct = shapley::value(cfg, theta, head, x, shapley::CoalitionMask::from_bits(s, 4), b, 2);
    EXPECT_NEAR(game(s), direct, 1e-12) << s;
  }
}

TEST(ExactShapley, AdditiveGameGivesSingletonContributions) {
  LinearProbeGame game{random_values(9, 1), random_values(9, 2), random_values(9, 3), 0.4};
  auto phi = shapley::exact_shapley(9, game);
  for (std::size_t m = 0; m < 9; ++m) {
    const double singleton = game(shapley::Bits(1) << m) - game(0);
    EXPECT_NEAR(phi[m], singleton, 1e-12);
    EXPECT_NEAR(phi[m], game.analytic()[m], 1e-12);
  }
}

TEST(ExactShapley, SymmetricPlayersShareEqually) {
  InteractionGame game{{0.5, 0.5, 1.0, -0.3}, 2.0};
  auto phi = shapley::exact_shapley(4, game);
  EXPECT_NEAR(phi[0], phi[1], 1e-9);
  EXPECT_NEAR(total(phi), game(0b1111) - game(0), 1e-12);
}

TEST(ExactShapley, EfficiencyOnModel) {
  auto cfg = tiny_model(12, 4, 16, 2);
  ASSERT_EQ(cfg.num_patches(), 9u);
  auto theta = noisy_theta(cfg, 9);
  auto head = model::make_head({"a", "b"}, cfg.embed_dim, 1);
  model::InferenceEngine engine(cfg, theta, head);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto x = image_for(cfg, 10 + seed), b = image_for(cfg, 20 + seed);
    auto phi = shapley::exact_shapley(engine, x, 0, b);
    EXPECT_NEAR(total(phi), engine.logit(x, 0) - engine.logit(b, 0), 1e-8);
  }
}

TEST(ExactShapley, DummyPatchGetsZero) {
  auto cfg = tiny_model();
  auto theta = noisy_theta(cfg, 11);
  auto head = model::make_head({"a", "b"}, cfg.embed_dim, 1);
  auto x = image_for(cfg, 12);
  auto b = image_for(cfg, 13);
  // Patch 2 identical in x and baseline: masking it changes nothing.
  auto same = shapley::mask_apply(cfg, x, shapley::CoalitionMask::from_bits(0b1011, 4), b);
  model::InferenceEngine engine(cfg, theta, head);
  auto phi = shapley::exact_shapley(engine, same, 1, b);
  EXPECT_LT(std::abs(phi[2]), 1e-8);
}

TEST(ExactShapley, RefusesLargeGames) {
  LinearProbeGame game{std::vector<double>(21, 1.0), std::vector<double>(21, 1.0), std::vector<double>(21, 0.0)};
  try {
    shapley::exact_shapley(21, game);
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("kernel_shap"), std::string::npos);
  }
}

TEST(KernelShap, KernelWeightExamples) {
  EXPECT_DOUBLE_EQ(shapley::kernel_weight(4, 1), 0.25);
  EXPECT_DOUBLE_EQ(shapley::kernel_weight(4, 2), 3.0 / (6.0 * 2.0 * 2.0));
  EXPECT_THROW(shapley::kernel_weight(4, 0), ContractError);
  EXPECT_THROW(shapley::kernel_weight(4, 4), ContractError);
}

TEST(KernelShap, EnumerationMatchesExact) {
  for (std::size_t M : {3u, 5u, 8u}) {
    InteractionGame game{random_values(M, M), 1.5};
    auto exact = shapley::exact_shapley(M, game);
    auto r = shapley::kernel_shap(M, game, {(std::size_t{1} << M) - 2, 0});
    EXPECT_TRUE(r.enumerated);
    for (std::size_t m = 0; m < M; ++m) EXPECT_NEAR(r.phi[m], exact[m], 1e-9) << M;
  }
}

TEST(KernelShap, EfficiencyHoldsForAnyBudget) {
  InteractionGame game{random_values(9, 3), -0.7};
  for (std::size_t P : {1u, 5u, 11u, 40u, 200u}) {
    auto r = shapley::kernel_shap(9, game, {P, P});
    EXPECT_NEAR(total(r.phi), game(shapley::all_bits(9)) - game(0), 1e-9) << P;
    for (double v : r.phi) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(KernelShap, UnderdeterminedBudgetUsesRidge) {
  InteractionGame game{random_values(9, 4), 0.2};
  auto r = shapley::kernel_shap(9, game, {3, 1});
  EXPECT_TRUE(r.ridge_applied);
}

TEST(KernelShap, IsSeedDeterministic) {
  InteractionGame game{random_values(10, 5), 0.3};
  auto a = shapley::kernel_shap(10, game, {60, 42});
  auto b = shapley::kernel_shap(10, game, {60, 42});
  auto c = shapley::kernel_shap(10, game, {60, 43});
  EXPECT_EQ(a.phi, b.phi);
  EXPECT_NE(a.phi, c.phi);
}

TEST(KernelShap, SampledSizesFollowKernel) {
  const std::size_t M = 6;
  auto rows = shapley::sample_coalitions(M, 60000, 7);
  std::vector<double> counts(M, 0.0);
  for (auto s : rows) {
    const auto k = static_cast<std::size_t>(std::popcount(s));
    ASSERT_GE(k, 1u);
    ASSERT_LT(k, M);
    counts[k] += 1.0;
  }
  double norm = 0.0;
  for (std::size_t s = 1; s < M; ++s) norm += shapley::kernel_weight(M, s) * shapley::binomial(M, s);
  for (std::size_t s = 1; s < M; ++s) {
    const double expected = shapley::kernel_weight(M, s) * shapley::binomial(M, s) / norm;
    EXPECT_NEAR(counts[s] / 60000.0, expected, 0.01) << s;
  }
}

TEST(KernelShap, ConvergesToExactWithBudget) {
  InteractionGame game{random_values(8, 6), 1.0};
  auto exact = shapley::exact_shapley(8, game);
  auto err = [&](std::size_t P) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto r = shapley::kernel_shap(8, game, {P, seed});
      for (std::size_t m = 0; m < 8; ++m) worst += std::abs(r.phi[m] - exact[m]);
    }
    return worst;
  };
  EXPECT_LT(err(200), err(20));
}

TEST(Baseline, Policies) {
  auto cfg = tiny_model();
  const auto x = image_for(cfg, 1), mean = image_for(cfg, 2);
  EXPECT_EQ(shapley::make_baseline("mean", cfg, x, mean), mean);
  auto zeros = shapley::make_baseline("zeros", cfg, x, mean);
  EXPECT_EQ(zeros, std::vector<double>(x.size(), 0.0));
  auto pm = shapley::make_baseline("patch_mean", cfg, x, mean);
  EXPECT_NEAR(total(pm), total(x), 1e-10);
  EXPECT_THROW(shapley::make_baseline("blur", cfg, x, mean), ConfigError);
}

TEST(BudgetCurve, SelfComparisonCeilingAndSummaries) {
  auto cfg = tiny_model();
  auto d = data::gen_split(fixtures::strokes_domain(), fixtures::geometry_of(cfg), "test", 6);
  auto theta = noisy_theta(cfg, 14);
  auto head = fixtures::head_for(d, cfg);
  shapley::ShapConfig exact;
  exact.kind = shapley::ExplainerKind::kExact;
  auto explained = data::attach_explanations(d, cfg, theta, head, exact, 0, 1);
  shapley::ShapConfig kernel;
  auto curve = shapley::shap_budget_curve(cfg, theta, head, explained, {14}, kernel, 2);
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_DOUBLE_EQ(curve[0].score.mean, 1.0);

  std::vector<shapley::BudgetPoint> c(3);
  c[0].budget = 10, c[0].score.mean = 0.4;
  c[1].budget = 20, c[1].score.mean = 0.3;
  c[2].budget = 40, c[2].score.mean = 0.7;
  EXPECT_EQ(shapley::count_inversions(c), 1u);
  EXPECT_EQ(shapley::crossover_budget(c, 0.5), 40u);
  EXPECT_FALSE(shapley::crossover_budget(c, 0.9).has_value());
}
