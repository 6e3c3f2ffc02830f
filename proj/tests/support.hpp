#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/data/explain.hpp"
#include "xferlab/data/synthetic.hpp"
#include "xferlab/model/config.hpp"
#include "xferlab/model/head.hpp"
#include "xferlab/model/parameters.hpp"
#include "xferlab/shapley/coalition.hpp"
#include "xferlab/training/trainer.hpp"

namespace xferlab::fixtures {

inline model::ModelConfig tiny_model(std::size_t image = 8, std::size_t patch = 4, std::size_t dim = 8,
                                     std::size_t layers = 1) {
  model::ModelConfig c;
  c.image_size = image;
  c.patch_size = patch;
  c.channels = 3;
  c.embed_dim = dim;
  c.num_layers = layers;
  c.num_heads = 2;
  c.mlp_ratio = 2;
  c.seed = 11;
  return c;
}

inline data::ImageGeometry geometry_of(const model::ModelConfig& c) {
  return {c.image_size, c.patch_size, c.channels};
}

inline data::DomainSpec strokes_domain(std::string name = "strokes", std::uint64_t seed = 5,
                                       std::vector<std::string> classes = {"hbar", "vbar", "diag"},
                                       std::size_t glyphs = 1) {
  return {std::move(name), "strokes", glyphs, "smooth", 0.03, std::move(classes), {0.95, 0.3, 0.2}, seed};
}

inline data::DomainSpec blocks_domain(std::string name = "blocks", std::uint64_t seed = 6) {
  return {std::move(name), "blocks", 1, "stripes", 0.03, {"checker", "ring", "dot"}, {0.3, 0.4, 0.95}, seed};
}

inline model::HeadMatrix head_for(const data::Dataset& d, const model::ModelConfig& c, std::uint64_t seed = 3) {
  return model::make_head(d.class_names, c.embed_dim, seed);
}

inline std::vector<double> random_values(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

// Attaches synthetic ground truth (random per-patch values) to every sample.
inline data::Dataset with_random_phi(data::Dataset d, std::uint64_t seed, double scale = 0.5) {
  for (std::size_t i = 0; i < d.samples.size(); ++i) d.samples[i].phi = random_values(d.num_patches, seed + i, scale);
  return d;
}

// A linear probe over patches: v(S) = bias + sum_m w_m * (S has m ? x_m : b_m),
// where x_m and b_m are per-patch scalar features of the input and the
// baseline. Its Shapley values are w_m (x_m - b_m).
struct LinearProbeGame {
  std::vector<double> weights, input, baseline;
  double bias = 0.0;

  std::size_t num_players() const { return weights.size(); }

  double operator()(shapley::Bits s) const {
    double v = bias;
    for (std::size_t m = 0; m < weights.size(); ++m) v += weights[m] * (((s >> m) & 1u) ? input[m] : baseline[m]);
    return v;
  }

  std::vector<double> analytic() const {
    std::vector<double> phi(weights.size());
    for (std::size_t m = 0; m < weights.size(); ++m) phi[m] = weights[m] * (input[m] - baseline[m]);
    return phi;
  }
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("xferlab_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace xferlab::fixtures
