#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"
#include "xferlab/evaluation/metrics.hpp"
#include "xferlab/evaluation/similarity.hpp"
#include "xferlab/evaluation/stats.hpp"
#include "xferlab/evaluation/table.hpp"
#include "xferlab/shapley/exact.hpp"
#include "xferlab/training/loss.hpp"

using namespace xferlab;
using fixtures::LinearProbeGame;
using fixtures::random_values;

TEST(IouAtK, Examples) {
  std::vector<double> a(20), b(20);
  for (std::size_t i = 0; i < 20; ++i) {
    a[i] = i < 10 ? 1.0 + static_cast<double>(i) : 0.0;
    b[i] = i < 10 ? 0.0 : 1.0 + static_cast<double>(i);
  }
  EXPECT_EQ(evaluation::iou_at_k(a, a, 10), 1.0);
  EXPECT_EQ(evaluation::iou_at_k(a, b, 10), 0.0);
  std::vector<double> c(20, 0.0);
  for (std::size_t i = 5; i < 15; ++i) c[i] = 1.0 + static_cast<double>(i);
  EXPECT_DOUBLE_EQ(evaluation::iou_at_k(a, c, 10), 1.0 / 3.0);
}

TEST(IouAtK, TiesBreakByLowerIndex) {
  std::vector<double> flat(6, 1.0);
  EXPECT_EQ(evaluation::top_k(flat, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(IouAtK, SymmetricAndMonotoneInvariant) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto x = random_values(16, seed), y = random_values(16, seed + 1000);
    const double iou = evaluation::iou_at_k(x, y, 5);
    EXPECT_EQ(iou, evaluation::iou_at_k(y, x, 5));
    auto tx = x, ty = y;
    for (auto& v : tx) v = std::exp(v) * 3.0 - 1.0;
    for (auto& v : ty) v = std::exp(v) * 3.0 - 1.0;
    EXPECT_EQ(iou, evaluation::iou_at_k(tx, ty, 5));
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0);
  }
}

TEST(Infidelity, ExactAdditiveExplanationIsZero) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    LinearProbeGame game{random_values(9, seed), random_values(9, seed + 10), random_values(9, seed + 20), 0.3};
    auto phi = shapley::exact_shapley(9, game);
    EXPECT_LT(evaluation::infidelity(game, phi, {}, seed), 1e-10);
    std::vector<double> zero(9, 0.0);
    EXPECT_GT(evaluation::infidelity(game, zero, {}, seed), 0.0);
  }
}

TEST(Infidelity, DeterministicPerSeed) {
  LinearProbeGame game{random_values(9, 1), random_values(9, 2), random_values(9, 3)};
  std::vector<double> phi = random_values(9, 4);
  EXPECT_EQ(evaluation::infidelity(game, phi, {}, 5), evaluation::infidelity(game, phi, {}, 5));
  EXPECT_THROW(evaluation::infidelity(game, std::vector<double>(8, 0.0), {}, 5), DimensionError);
}

TEST(Metrics, ERmsePythagorean) {
  auto cfg = fixtures::tiny_model();
  auto d = data::gen_split(fixtures::strokes_domain(), fixtures::geometry_of(cfg), "test", 1);
  auto theta = model::init_parameter_vector(cfg);
  auto head = fixtures::head_for(d, cfg);
  model::InferenceEngine engine(cfg, theta, head);
  auto out = engine.evaluate(d.samples[0].pixels);
  std::vector<double> phi(cfg.num_patches());
  for (std::size_t m = 0; m < phi.size(); ++m) phi[m] = out.attribution(m, d.samples[0].label);
  d.samples[0].phi = phi;
  EXPECT_EQ(evaluation::e_rmse(cfg, theta, head, d), 0.0);
  (*d.samples[0].phi)[0] -= 3.0;
  (*d.samples[0].phi)[1] -= 4.0;
  EXPECT_NEAR(evaluation::e_rmse(cfg, theta, head, d), 5.0, 1e-12);
  d.samples[0].phi.reset();
  EXPECT_THROW(evaluation::e_rmse(cfg, theta, head, d), ContractError);
}

TEST(Metrics, ERmseIsSqrtOfExplanationLoss) {
  auto cfg = fixtures::tiny_model();
  auto d = fixtures::with_random_phi(data::gen_split(fixtures::strokes_domain(), fixtures::geometry_of(cfg), "test", 7), 3);
  auto theta = model::init_parameter_vector(cfg);
  auto head = fixtures::head_for(d, cfg);
  model::InferenceEngine engine(cfg, theta, head);
  std::vector<model::SelfExplainingOutput> outs;
  std::vector<std::size_t> labels;
  std::vector<std::optional<std::vector<double>>> phis;
  for (const auto& s : d.samples) {
    outs.push_back(engine.evaluate(s.pixels));
    labels.push_back(s.label);
    phis.push_back(s.phi);
  }
  EXPECT_EQ(evaluation::e_rmse(cfg, theta, head, d), std::sqrt(training::explanation_loss(outs, labels, phis)));
}

TEST(Metrics, AccuracyAndReport) {
  auto cfg = fixtures::tiny_model();
  auto d = fixtures::with_random_phi(data::gen_split(fixtures::strokes_domain(), fixtures::geometry_of(cfg), "test", 9), 3);
  auto theta = model::init_parameter_vector(cfg);
  auto head = fixtures::head_for(d, cfg);
  const double acc = evaluation::accuracy(cfg, theta, head, d);
  auto report = evaluation::evaluate_model(cfg, theta, head, d, {});
  EXPECT_EQ(report.accuracy, acc);
  EXPECT_EQ(report.samples, 9u);
  EXPECT_EQ(report.explained, 9u);
  EXPECT_NEAR(report.e_rmse, evaluation::e_rmse(cfg, theta, head, d), 1e-12);
  for (double v : {report.iou_at_1, report.iou_at_10}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GE(report.infidelity, 0.0);
  // Relabel every sample with a class the model does not predict.
  model::InferenceEngine engine(cfg, theta, head);
  auto wrong = d;
  for (auto& s : wrong.samples) s.label = (model::predict_class(engine.logits(s.pixels)) + 1) % d.num_classes();
  EXPECT_EQ(evaluation::accuracy(cfg, theta, head, wrong), 0.0);
}

TEST(NormalizedReport, Examples) {
  evaluation::MetricsReport ref{0.9, 2.0, 0.5, 0.4, 1.0, 10, 10, 0, "d"};
  auto self = evaluation::normalized_report(ref, ref);
  EXPECT_EQ(self.accuracy, 1.0);
  EXPECT_EQ(self.e_rmse, 1.0);
  EXPECT_EQ(self.iou_at_10, 1.0);
  auto half = ref;
  half.accuracy = 0.45;
  EXPECT_DOUBLE_EQ(evaluation::normalized_report(half, ref).accuracy, 0.5);
  auto zero = ref;
  zero.e_rmse = 0.0;
  EXPECT_THROW(evaluation::normalized_report(ref, zero), UndefinedError);
  auto other = ref;
  other.dataset = "e";
  EXPECT_THROW(evaluation::normalized_report(other, ref), ContractError);
}

TEST(Pearson, Examples) {
  std::vector<double> xs{1, 2, 3, 4, 5}, ys{2, 1, 4, 3, 5};
  auto r = evaluation::pearson(xs, ys);
  EXPECT_NEAR(r.r, 0.8, 1e-15);
  EXPECT_NEAR(r.p, 0.10408803866182799, 1e-12);
  std::vector<double> affine, neg;
  for (double x : xs) {
    affine.push_back(2.0 * x + 1.0);
    neg.push_back(-x);
  }
  EXPECT_NEAR(evaluation::pearson(xs, affine).r, 1.0, 1e-15);
  EXPECT_NEAR(evaluation::pearson(xs, neg).r, -1.0, 1e-15);
  EXPECT_THROW(evaluation::pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), UndefinedError);
  EXPECT_THROW(evaluation::pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ContractError);
}

TEST(Pearson, AffineInvarianceAndAntisymmetry) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto x = random_values(12, seed), y = random_values(12, seed + 50);
    auto base = evaluation::pearson(x, y);
    auto tx = x, ny = y;
    for (auto& v : tx) v = 4.5 * v - 2.0;
    for (auto& v : ny) v = -v;
    EXPECT_NEAR(evaluation::pearson(tx, y).r, base.r, 1e-12);
    EXPECT_NEAR(evaluation::pearson(x, ny).r, -base.r, 1e-12);
    EXPECT_NEAR(evaluation::pearson(x, ny).p, base.p, 1e-12);
    EXPECT_GE(base.p, 0.0);
    EXPECT_LE(base.p, 1.0);
  }
}

TEST(Stats, IncompleteBetaOracles) {
  EXPECT_NEAR(evaluation::incomplete_beta(2.5, 0.5, 0.3), 0.018927124071945658, 1e-14);
  EXPECT_NEAR(evaluation::incomplete_beta(0.5, 0.5, 0.9), 0.7951672353008665, 1e-14);
  EXPECT_NEAR(evaluation::incomplete_beta(10, 3, 0.7), 0.25281534785499993, 1e-14);
  EXPECT_EQ(evaluation::incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(evaluation::incomplete_beta(2, 3, 1.0), 1.0);
  EXPECT_NEAR(evaluation::student_t_two_sided(2.5, 7), 0.040992218585752874, 1e-13);
}

TEST(Stats, MeanInterval) {
  std::vector<double> v{1, 2, 3, 4};
  auto i = evaluation::mean_interval(v);
  EXPECT_EQ(i.mean, 2.5);
  const double se = std::sqrt(5.0 / 3.0 / 4.0);
  EXPECT_NEAR(i.hi - i.mean, 1.96 * se, 1e-12);
  EXPECT_NEAR(i.mean - i.lo, 1.96 * se, 1e-12);
  auto one = evaluation::mean_interval(std::vector<double>{7});
  EXPECT_EQ(one.lo, 7.0);
  EXPECT_EQ(one.hi, 7.0);
}

TEST(SimilarityStudy, DegenerateRowsAreExcluded) {
  std::vector<evaluation::SimilarityRow> rows = {
      {"a", "a", true, 1.0, 1.0, 1.0, 1.0},   {"a", "b", true, 0.8, 0.7, 0.5, 0.9},
      {"b", "a", true, 0.6, 0.5, 0.7, 0.4},   {"a", "c", false, 0.1, 0.2, 0.9, 0.95},
      {"c", "a", false, 0.2, 0.1, 0.95, 0.9},
  };
  auto s = evaluation::similarity_study(rows);
  EXPECT_EQ(s.used, 4u);
  EXPECT_TRUE(s.rows[0].degenerate);
  EXPECT_TRUE(s.rows[2].low_accuracy);
  ASSERT_TRUE(s.star_vs_e_rmse.has_value());
  EXPECT_LT(s.star_vs_e_rmse->r, 0.0);
  ASSERT_TRUE(s.ft_vs_star.has_value());
  EXPECT_GT(s.ft_vs_star->r, 0.0);
}

TEST(SimilarityStudy, TableRoundTripsBitExactly) {
  std::vector<evaluation::SimilarityRow> rows = {{"a", "b", true, 0.1 + 0.2, 1.0 / 3.0, 0.7, 1e-17, false, true},
                                                 {"b", "a", false, -0.5, 0.25, 2.0, 0.9, true, false}};
  const auto text = evaluation::similarity_table(rows).serialize(',');
  auto back = evaluation::similarity_rows(evaluation::Table::parse(text, ',', evaluation::similarity_header()));
  EXPECT_EQ(back, rows);
  EXPECT_EQ(evaluation::similarity_table(back).serialize(','), text);
}

TEST(Table, RejectsMalformedInput) {
  evaluation::Table t{{"a", "b"}, {}};
  EXPECT_THROW(t.add({"1"}), ContractError);
  t.add({"x,y", "1"});
  EXPECT_THROW(t.serialize(','), ContractError);
  EXPECT_THROW(evaluation::Table::parse("a,b\n1\n", ','), FormatError);
  EXPECT_THROW(evaluation::Table::parse("a,c\n1,2\n", ',', {"a", "b"}), FormatError);
}
