#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xferlab/model/vit.hpp"
#include "xferlab/numerics/ops.hpp"
#include "xferlab/util/error.hpp"

namespace xferlab::training {

namespace nx = xferlab::numerics;

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
}

// Squared residual between the label column of the predicted attributions
// and the ground truth.
inline double attribution_residual(const model::SelfExplainingOutput& out, std::size_t label,
                                   std::span<const double> phi) {
  if (label >= out.num_classes) throw IndexError("label " + std::to_string(label) + " out of range");
  if (phi.size() != out.num_patches) {
    throw DimensionError("phi has " + std::to_string(phi.size()) + " entries, model has " +
                         std::to_string(out.num_patches) + " patches");
  }
  double s = 0.0;
  for (std::size_t m = 0; m < out.num_patches; ++m) {
    const double d = out.attribution(m, label) - phi[m];
    s += d * d;
  }
  return s;
}

// Mean over samples of ||Phi_y - phi||^2. Every sample must carry phi.
inline double explanation_loss(std::span<const model::SelfExplainingOutput> outputs,
                               std::span<const std::size_t> labels,
                               std::span<const std::optional<std::vector<double>>> phis) {
  if (outputs.size() != labels.size() || outputs.size() != phis.size()) {
    throw DimensionError("explanation_loss: batch sizes disagree");
  }
  if (outputs.empty()) throw ContractError("explanation_loss over an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (!phis[i]) throw ContractError("explanation_loss: sample " + std::to_string(i) + " has no ground-truth phi");
    total += attribution_residual(outputs[i], labels[i], *phis[i]);
  }
  return total * (1.0 / static_cast<double>(outputs.size()));
}

inline double loss_alpha(double alpha, double classification, double explanation) {
  check_alpha(alpha);
  return alpha * classification + (1.0 - alpha) * explanation;
}

// Graph versions used by the trainer.
inline nx::Var explanation_term(nx::Graph& g, nx::Var attributions, std::size_t label, std::span<const double> phi) {
  auto col = nx::column(g, attributions, label);
  if (g.value(col).size() != phi.size()) throw DimensionError("phi length does not match patch count");
  auto target = g.constant(nx::Tensor({phi.size()}, std::vector<double>(phi.begin(), phi.end())));
  return nx::sum_squares(g, nx::sub(g, col, target));
}

struct BatchItem {
  std::span<const double> pixels;
  std::size_t label = 0;
  const std::vector<double>* phi = nullptr;  // null when unexplained
};

struct BatchLoss {
  nx::Var total;
  double classification = 0.0;
  double explanation = 0.0;
  std::size_t explained = 0;
};

// alpha * mean CE + (1 - alpha) * mean explanation loss over the explained
// members of the batch. Terms with a zero coefficient are not built.
inline BatchLoss batch_loss(model::ModelGraph& mg, std::span<const BatchItem> batch, double alpha) {
  check_alpha(alpha);
  if (batch.empty()) throw ContractError("empty batch");
  auto& g = mg.graph();
  std::vector<nx::Var> ce_terms, exp_terms;
  for (const auto& item : batch) {
    auto out = mg.forward(item.pixels);
    if (alpha > 0.0) ce_terms.push_back(nx::cross_entropy(g, out.logits, item.label));
    if (alpha < 1.0 && item.phi != nullptr) exp_terms.push_back(explanation_term(g, out.attributions, item.label, *item.phi));
  }
  BatchLoss r;
  std::vector<nx::Var> parts;
  if (!ce_terms.empty()) {
    auto cls = nx::scale(g, nx::add_scalars(g, ce_terms), 1.0 / static_cast<double>(ce_terms.size()));
    r.classification = g.value(cls).item();
    parts.push_back(alpha == 1.0 ? cls : nx::scale(g, cls, alpha));
  }
  if (!exp_terms.empty()) {
    auto ex = nx::scale(g, nx::add_scalars(g, exp_terms), 1.0 / static_cast<double>(exp_terms.size()));
    r.explanation = g.value(ex).item();
    r.explained = exp_terms.size();
    parts.push_back(alpha == 0.0 ? ex : nx::scale(g, ex, 1.0 - alpha));
  }
  if (parts.empty()) {
    throw ContractError("batch has no explained samples and alpha = 0; nothing to optimize");
  }
  r.total = parts.size() == 1 ? parts[0] : nx::add_scalars(g, parts);
  return r;
}

}  // namespace xferlab::training
