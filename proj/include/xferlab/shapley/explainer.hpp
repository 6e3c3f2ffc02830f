#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xferlab/shapley/exact.hpp"
#include "xferlab/shapley/kernel.hpp"
#include "xferlab/util/error.hpp"

namespace xferlab::shapley {

enum class ExplainerKind { kExact, kKernel };

inline std::string to_string(ExplainerKind k) { return k == ExplainerKind::kExact ? "exact" : "kernel"; }

inline ExplainerKind parse_explainer_kind(const std::string& s) {
  if (s == "exact") return ExplainerKind::kExact;
  if (s == "kernel" || s == "kernel-shap" || s == "kernel_shap") return ExplainerKind::kKernel;
  throw ConfigError("unknown explainer '" + s + "' (expected exact or kernel)");
}

// Baseline policies: "mean" = dataset mean image, "zeros" = black image,
// "patch_mean" = every patch of x flattened to its per-channel mean.
inline bool is_baseline_policy(const std::string& s) { return s == "mean" || s == "zeros" || s == "patch_mean"; }

struct ShapConfig {
  ExplainerKind kind = ExplainerKind::kKernel;
  std::size_t budget = 200;
  std::string baseline = "mean";
  std::uint64_t seed = 0;

  void validate() const {
    if (kind == ExplainerKind::kKernel && budget == 0) throw ConfigError("kernel_shap budget must be positive");
    if (!is_baseline_policy(baseline)) {
      throw ConfigError("unknown baseline policy '" + baseline + "' (expected mean, zeros or patch_mean)");
    }
  }
};

inline std::vector<double> make_baseline(const std::string& policy, const model::ModelConfig& cfg,
                                         std::span<const double> x, std::span<const double> dataset_mean) {
  if (policy == "mean") {
    if (dataset_mean.size() != cfg.image_values()) throw DimensionError("dataset mean has the wrong size");
    return {dataset_mean.begin(), dataset_mean.end()};
  }
  if (policy == "zeros") return std::vector<double>(cfg.image_values(), 0.0);
  if (policy == "patch_mean") {
    if (x.size() != cfg.image_values()) throw DimensionError("image has the wrong size");
    std::vector<double> out(x.size());
    const auto G = cfg.grid(), P = cfg.patch_size, S = cfg.image_size;
    for (std::size_t m = 0; m < cfg.num_patches(); ++m) {
      const auto gy = m / G, gx = m % G;
      for (std::size_t c = 0; c < cfg.channels; ++c) {
        double sum = 0.0;
        for (std::size_t dy = 0; dy < P; ++dy)
          for (std::size_t dx = 0; dx < P; ++dx) sum += x[c * S * S + (gy * P + dy) * S + gx * P + dx];
        const double mean = sum / static_cast<double>(P * P);
        for (std::size_t dy = 0; dy < P; ++dy)
          for (std::size_t dx = 0; dx < P; ++dx) out[c * S * S + (gy * P + dy) * S + gx * P + dx] = mean;
      }
    }
    return out;
  }
  throw ConfigError("unknown baseline policy '" + policy + "'");
}

struct Explanation {
  std::vector<double> phi;
  bool ridge_applied = false;
};

// Explains the class-c logit of x with the configured explainer; `seed`
// drives coalition sampling and should be derived per sample.
inline Explanation explain(model::InferenceEngine& engine, std::span<const double> x, std::size_t c,
                           std::span<const double> baseline, const ShapConfig& cfg, std::uint64_t seed) {
  if (cfg.kind == ExplainerKind::kExact) return {exact_shapley(engine, x, c, baseline), false};
  auto r = kernel_shap(engine, x, c, baseline, KernelShapOptions{cfg.budget, seed});
  return {std::move(r.phi), r.ridge_applied};
}

}  // namespace xferlab::shapley
