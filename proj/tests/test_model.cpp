#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "support.hpp"
#include "xferlab/model/checkpoint.hpp"
#include "xferlab/model/inference.hpp"
#include "xferlab/model/vit.hpp"

using namespace xferlab;
using fixtures::random_values;
using fixtures::tiny_model;

namespace {

model::ParameterVector perturbed_theta(const model::ModelConfig& cfg, std::uint64_t seed) {
  auto theta = model::init_parameter_vector(cfg);
  const auto noise = random_values(theta.size(), seed, 0.05);
  for (std::size_t i = 0; i < theta.size(); ++i) theta.mutable_values()[i] += noise[i];
  return theta;
}

std::vector<double> random_image(const model::ModelConfig& cfg, std::uint64_t seed) {
  auto v = random_values(cfg.image_values(), seed, 0.3);
  for (auto& x : v) x = std::clamp(0.5 + x, 0.0, 1.0);
  return v;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0) /
         std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0) *
                   std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
}

}  // namespace

TEST(Head, SameNameGivesSameColumn) {
  auto a = model::make_head({"cat", "dog"}, 16, 5);
  auto b = model::make_head({"dog", "owl"}, 16, 5);
  EXPECT_EQ(a.column(1), b.column(0));
  EXPECT_DOUBLE_EQ(cosine(a.column(1), b.column(0)), 1.0);
}

TEST(Head, ColumnsHaveUnitNorm) {
  auto h = model::make_head({"a", "b", "c", "d"}, 64, 9);
  for (std::size_t c = 0; c < h.num_classes(); ++c) {
    auto col = h.column(c);
    EXPECT_NEAR(std::sqrt(std::inner_product(col.begin(), col.end(), col.begin(), 0.0)), 1.0, 1e-12);
  }
}

TEST(Head, DistinctNamesAreNearlyOrthogonal) {
  auto h = model::make_head({"hbar", "vbar", "diag", "ring", "checker"}, 64, 1);
  for (std::size_t i = 0; i < h.num_classes(); ++i)
    for (std::size_t j = i + 1; j < h.num_classes(); ++j) EXPECT_LT(std::abs(cosine(h.column(i), h.column(j))), 0.9);
}

TEST(Head, DuplicateNamesAreRejected) {
  EXPECT_THROW(model::make_head({"a", "a"}, 8, 1), ConfigError);
}

TEST(Forward, OutputShapes) {
  auto cfg = tiny_model();
  auto theta = perturbed_theta(cfg, 1);
  auto head = model::make_head({"a", "b", "c"}, cfg.embed_dim, 2);
  model::InferenceEngine engine(cfg, theta, head);
  auto out = engine.evaluate(random_image(cfg, 3));
  EXPECT_EQ(out.logits.size(), 3u);
  EXPECT_EQ(out.attributions.size(), cfg.num_patches() * 3);
  EXPECT_EQ(out.num_patches, cfg.num_patches());
}

TEST(Forward, HeadPermutationPermutesOutputs) {
  auto cfg = tiny_model();
  auto theta = perturbed_theta(cfg, 4);
  auto head = model::make_head({"a", "b", "c"}, cfg.embed_dim, 2);
  auto swapped = model::make_head({"c", "a", "b"}, cfg.embed_dim, 2);
  const auto image = random_image(cfg, 5);
  auto x = model::InferenceEngine(cfg, theta, head).evaluate(image);
  auto y = model::InferenceEngine(cfg, theta, swapped).evaluate(image);
  const std::size_t perm[3] = {2, 0, 1};  // column j of swapped is column perm[j] of head
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(y.logits[j], x.logits[perm[j]]);
    for (std::size_t m = 0; m < cfg.num_patches(); ++m) EXPECT_EQ(y.attributions[m * 3 + j], x.attributions[m * 3 + perm[j]]);
  }
}

TEST(Forward, DoublingHeadDoublesOutputs) {
  auto cfg = tiny_model();
  auto theta = perturbed_theta(cfg, 6);
  auto head = model::make_head({"a", "b"}, cfg.embed_dim, 2);
  auto doubled = head;
  for (auto& w : doubled.weights) w *= 2.0;
  const auto image = random_image(cfg, 7);
  auto x = model::InferenceEngine(cfg, theta, head).evaluate(image);
  auto y = model::InferenceEngine(cfg, theta, doubled).evaluate(image);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(y.logits[c], 2.0 * x.logits[c]);
  for (std::size_t i = 0; i < x.attributions.size(); ++i) EXPECT_EQ(y.attributions[i], 2.0 * x.attributions[i]);
}

TEST(Forward, GraphAndEngineAgree) {
  auto cfg = tiny_model(8, 4, 8, 2);
  auto theta = perturbed_theta(cfg, 8);
  auto head = model::make_head({"a", "b", "c"}, cfg.embed_dim, 2);
  const auto image = random_image(cfg, 9);
  auto fast = model::InferenceEngine(cfg, theta, head).evaluate(image);
  auto graph = model::ModelGraph(cfg, theta, head, false).evaluate(image);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(fast.logits[c], graph.logits[c], 1e-12);
  for (std::size_t i = 0; i < fast.attributions.size(); ++i) EXPECT_NEAR(fast.attributions[i], graph.attributions[i], 1e-12);
  model::InferenceEngine engine(cfg, theta, head);
  EXPECT_NEAR(engine.logit(image, 1), fast.logits[1], 1e-12);
}

TEST(Forward, IsDeterministic) {
  auto cfg = tiny_model();
  auto theta = perturbed_theta(cfg, 10);
  auto head = model::make_head({"a", "b"}, cfg.embed_dim, 2);
  const auto image = random_image(cfg, 11);
  model::InferenceEngine engine(cfg, theta, head);
  auto a = engine.evaluate(image);
  auto b = engine.evaluate(image);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.attributions, b.attributions);
}

TEST(Forward, MismatchedLayoutOrHeadIsRejected) {
  auto cfg = tiny_model();
  auto other = tiny_model(8, 4, 8, 2);
  auto head = model::make_head({"a", "b"}, cfg.embed_dim, 2);
  EXPECT_THROW(model::InferenceEngine(cfg, model::init_parameter_vector(other), head), CompatibilityError);
  auto wide = model::make_head({"a", "b"}, 16, 2);
  EXPECT_THROW(model::InferenceEngine(cfg, model::init_parameter_vector(cfg), wide), DimensionError);
}

TEST(Flatten, RoundTripIsBitIdentical) {
  auto cfg = tiny_model();
  auto theta = perturbed_theta(cfg, 12);
  auto named = model::unflatten(theta);
  auto again = model::flatten(named);
  EXPECT_EQ(again.layout_fingerprint(), theta.layout_fingerprint());
  EXPECT_TRUE(std::equal(again.values().begin(), again.values().end(), theta.values().begin()));
}

TEST(Flatten, SizeIsSumOfElementCounts) {
  auto cfg = tiny_model();
  std::size_t total = 0;
  for (const auto& [name, shape] : model::parameter_shapes(cfg)) total += numerics::element_count(shape);
  EXPECT_EQ(model::init_parameter_vector(cfg).size(), total);
}

TEST(Flatten, UnflattenAgainstOtherLayoutFails) {
  auto theta = model::init_parameter_vector(tiny_model());
  auto other = model::model_layout(tiny_model(8, 4, 8, 2));
  EXPECT_THROW(model::unflatten(theta, *other), CompatibilityError);
}

TEST(PredictClass, ArgmaxWithLowestIndexTies) {
  EXPECT_EQ(model::predict_class(std::vector<double>{0.1, 0.9}), 1u);
  EXPECT_EQ(model::predict_class(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(model::predict_class(std::vector<double>{0.1 + 7.0, 0.9 + 7.0}), 1u);
}

TEST(Checkpoint, RoundTripWithHead) {
  auto cfg = tiny_model();
  auto theta = perturbed_theta(cfg, 13);
  auto head = model::make_head({"x", "y", "z"}, cfg.embed_dim, 4);
  auto decoded = model::decode_checkpoint(model::encode_checkpoint(theta, &head), "mem");
  EXPECT_EQ(decoded.params.fingerprint(), theta.fingerprint());
  ASSERT_TRUE(decoded.head.has_value());
  EXPECT_EQ(*decoded.head, head);
}

TEST(Checkpoint, HeaderIsBitExact) {
  auto theta = model::init_parameter_vector(tiny_model());
  const auto bytes = model::encode_checkpoint(theta);
  EXPECT_EQ(bytes.substr(0, 4), "SEVX");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(bytes[5], 0);
}

TEST(Checkpoint, CorruptionIsDetected) {
  auto theta = perturbed_theta(tiny_model(), 14);
  auto bytes = model::encode_checkpoint(theta);
  for (std::size_t pos : {std::size_t{0}, bytes.size() / 2, bytes.size() - 1}) {
    auto broken = bytes;
    broken[pos] ^= 0x01;
    EXPECT_THROW(model::decode_checkpoint(broken, "mem"), FormatError) << pos;
  }
  EXPECT_THROW(model::decode_checkpoint(bytes.substr(0, bytes.size() - 3), "mem"), FormatError);
}
