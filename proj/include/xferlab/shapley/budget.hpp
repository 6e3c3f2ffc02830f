#pragma once

#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xferlab/data/dataset.hpp"
#include "xferlab/evaluation/metrics.hpp"
#include "xferlab/evaluation/stats.hpp"
#include "xferlab/shapley/explainer.hpp"

namespace xferlab::shapley {

struct BudgetPoint {
  std::size_t budget = 0;
  evaluation::Interval score;
  std::size_t ridge = 0;  // solves that needed regularization
};

// Kernel SHAP at each budget on every explained sample, scored by IoU@k
// against the sample's ground truth. The reference model is the one the
// ground truth explains. `max_images` > 0 keeps the first explained samples
// only; the mean-image baseline is still taken over the whole set.
inline std::vector<BudgetPoint> shap_budget_curve(const model::ModelConfig& cfg, const model::ParameterVector& reference,
                                                  const model::HeadMatrix& head, const data::Dataset& d,
                                                  const std::vector<std::size_t>& budgets, const ShapConfig& shap,
                                                  std::size_t k = 10, std::size_t workers = 1,
                                                  std::size_t max_images = 0) {
  shap.validate();
  if (head.class_names != d.class_names) throw ContractError("head classes do not match '" + d.name + "'");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.samples[i].phi && (max_images == 0 || idx.size() < max_images)) idx.push_back(i);
  if (idx.empty()) throw ContractError("budget curve needs explained samples in '" + d.name + "'");
  const auto mean = d.mean_image();
  const auto kk = std::min(k, cfg.num_patches());
  std::vector<BudgetPoint> out;
  for (auto P : budgets) {
    if (P == 0) throw ConfigError("budgets must be positive");
    std::vector<double> scores(idx.size());
    std::vector<char> ridge(idx.size(), 0);
    parallel_chunks(idx.size(), workers, [&](std::size_t begin, std::size_t end) {
      model::InferenceEngine engine(cfg, reference, head);
      for (std::size_t j = begin; j < end; ++j) {
        const auto& s = d.samples[idx[j]];
        auto baseline = make_baseline(shap.baseline, cfg, s.pixels, mean);
        auto r = kernel_shap(engine, s.pixels, s.label, baseline,
                             KernelShapOptions{P, derive_seed(shap.seed, "budget-" + std::to_string(P), s.id)});
        scores[j] = evaluation::iou_at_k(r.phi, *s.phi, kk);
        ridge[j] = r.ridge_applied ? 1 : 0;
      }
    });
    BudgetPoint bp;
    bp.budget = P;
    bp.score = evaluation::mean_interval(scores);
    for (char c : ridge) bp.ridge += c ? 1 : 0;
    out.push_back(bp);
  }
  return out;
}

// Number of adjacent decreases in the mean score along the curve.
inline std::size_t count_inversions(const std::vector<BudgetPoint>& curve) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) n += curve[i].score.mean < curve[i - 1].score.mean ? 1 : 0;
  return n;
}

// Smallest budget whose mean score reaches `level`, if any.
inline std::optional<std::size_t> crossover_budget(const std::vector<BudgetPoint>& curve, double level) {
  for (const auto& p : curve)
    if (p.score.mean >= level) return p.budget;
  return std::nullopt;
}

}  // namespace xferlab::shapley
