#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "xferlab/data/dataset.hpp"
#include "xferlab/model/inference.hpp"
#include "xferlab/shapley/explainer.hpp"
#include "xferlab/training/loss.hpp"
#include "xferlab/util/parallel.hpp"

namespace xferlab::evaluation {

// Indices of the k largest values; ties go to the lower index.
inline std::vector<std::size_t> top_k(std::span<const double> v, std::size_t k) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

inline double iou_at_k(std::span<const double> predicted, std::span<const double> truth, std::size_t k) {
  if (predicted.size() != truth.size()) throw DimensionError("iou_at_k: attribution lengths differ");
  if (k == 0 || k > predicted.size()) {
    throw ContractError("iou_at_k: K = " + std::to_string(k) + " outside [1, " + std::to_string(predicted.size()) + "]");
  }
  auto a = top_k(predicted, k), b = top_k(truth, k);
  std::vector<std::size_t> inter, uni;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(uni));
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

struct InfidelityConfig {
  std::size_t draws = 32;
  double drop_probability = 0.25;
  std::uint64_t seed = 0;

  void validate() const {
    if (draws == 0) throw ConfigError("infidelity needs at least one draw");
    if (!(drop_probability > 0.0 && drop_probability < 1.0)) {
      throw ConfigError("infidelity drop probability must lie in (0, 1)");
    }
  }
};

// Mean squared gap between the attribution mass of a random dropped set I
// and the logit change when I is replaced by the baseline. `seed` should be
// derived per sample.
template <typename Game>
double infidelity(Game&& game, std::span<const double> phi, const InfidelityConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto M = game.num_players();
  if (phi.size() != M) throw DimensionError("infidelity: attribution length does not match patch count");
  const shapley::Bits full = shapley::all_bits(M);
  const double v_full = game(full);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double total = 0.0;
  for (std::size_t s = 0; s < cfg.draws; ++s) {
    shapley::Bits dropped = 0;
    double mass = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      if (u(rng) < cfg.drop_probability) {
        dropped |= shapley::Bits(1) << m;
        mass += phi[m];
      }
    }
    const double delta = v_full - game(full & ~dropped);
    total += (mass - delta) * (mass - delta);
  }
  return total / static_cast<double>(cfg.draws);
}

inline double infidelity(model::InferenceEngine& engine, std::span<const double> x, std::size_t y,
                         std::span<const double> phi, std::span<const double> baseline, const InfidelityConfig& cfg,
                         std::uint64_t seed) {
  shapley::ModelGame game(engine, x, baseline, y);
  return infidelity(game, phi, cfg, seed);
}

struct EvalConfig {
  InfidelityConfig infidelity;
  std::string baseline = "mean";
  std::size_t iou_small_k = 1;
  std::size_t iou_large_k = 10;
};

struct MetricsReport {
  double accuracy = 0.0;
  double e_rmse = 0.0;
  double iou_at_1 = 0.0;
  double iou_at_10 = 0.0;
  double infidelity = 0.0;
  std::size_t samples = 0;
  std::size_t explained = 0;
  std::uint64_t model_fingerprint = 0;
  std::string dataset;

  bool operator==(const MetricsReport&) const = default;
};

// Per-sample quantities behind a report, kept for interval estimates.
struct SampleMetrics {
  bool correct = false;
  std::optional<double> residual;  // ||Phi_y - phi||^2
  std::optional<double> iou_small, iou_large, infidelity;
};

inline std::vector<SampleMetrics> evaluate_samples(const model::ModelConfig& cfg, const model::ParameterVector& theta,
                                                   const model::HeadMatrix& head, const data::Dataset& d,
                                                   const EvalConfig& ec, std::size_t workers = 1) {
  if (d.size() == 0) throw ContractError("evaluation set '" + d.name + "' is empty");
  if (head.class_names != d.class_names) {
    throw ContractError("head classes do not match the label space of '" + d.name + "'");
  }
  ec.infidelity.validate();
  const auto mean = d.mean_image();
  const auto M = cfg.num_patches();
  const auto k_small = std::min(ec.iou_small_k, M), k_large = std::min(ec.iou_large_k, M);
  std::vector<SampleMetrics> out(d.size());
  parallel_chunks(d.size(), workers, [&](std::size_t begin, std::size_t end) {
    model::InferenceEngine engine(cfg, theta, head);
    for (std::size_t i = begin; i < end; ++i) {
      const auto& s = d.samples[i];
      auto o = engine.evaluate(s.pixels);
      auto& r = out[i];
      r.correct = model::predict_class(o) == s.label;
      if (!s.phi) continue;
      auto col = o.attribution_column(s.label);
      r.residual = training::attribution_residual(o, s.label, *s.phi);
      r.iou_small = iou_at_k(col, *s.phi, k_small);
      r.iou_large = iou_at_k(col, *s.phi, k_large);
      auto baseline = shapley::make_baseline(ec.baseline, cfg, s.pixels, mean);
      r.infidelity =
          infidelity(engine, s.pixels, s.label, col, baseline, ec.infidelity, derive_seed(ec.infidelity.seed, "infidelity", s.id));
    }
  });
  return out;
}

inline MetricsReport summarize(const std::vector<SampleMetrics>& per_sample, std::uint64_t model_fingerprint,
                               const std::string& dataset) {
  MetricsReport r;
  r.samples = per_sample.size();
  r.model_fingerprint = model_fingerprint;
  r.dataset = dataset;
  std::size_t correct = 0;
  double res = 0.0, i1 = 0.0, i10 = 0.0, inf = 0.0;
  for (const auto& s : per_sample) {
    correct += s.correct ? 1 : 0;
    if (!s.residual) continue;
    ++r.explained;
    res += *s.residual;
    i1 += *s.iou_small;
    i10 += *s.iou_large;
    inf += *s.infidelity;
  }
  r.accuracy = r.samples ? static_cast<double>(correct) / static_cast<double>(r.samples) : 0.0;
  if (r.explained > 0) {
    const double n = static_cast<double>(r.explained);
    r.e_rmse = std::sqrt(res * (1.0 / n));
    r.iou_at_1 = i1 / n;
    r.iou_at_10 = i10 / n;
    r.infidelity = inf / n;
  }
  return r;
}

// Accuracy over every sample; explanation metrics over the explained ones.
inline MetricsReport evaluate_model(const model::ModelConfig& cfg, const model::ParameterVector& theta,
                                    const model::HeadMatrix& head, const data::Dataset& d, const EvalConfig& ec,
                                    std::size_t workers = 1) {
  return summarize(evaluate_samples(cfg, theta, head, d, ec, workers), theta.fingerprint(), d.name);
}

inline double accuracy(const model::ModelConfig& cfg, const model::ParameterVector& theta,
                       const model::HeadMatrix& head, const data::Dataset& d) {
  if (d.size() == 0) throw ContractError("accuracy over an empty set");
  model::InferenceEngine engine(cfg, theta, head);
  std::size_t correct = 0;
  for (const auto& s : d.samples) correct += model::predict_class(engine.logits(s.pixels)) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

// sqrt of the explanation loss over the set; every sample needs phi.
inline double e_rmse(const model::ModelConfig& cfg, const model::ParameterVector& theta,
                     const model::HeadMatrix& head, const data::Dataset& d) {
  model::InferenceEngine engine(cfg, theta, head);
  std::vector<model::SelfExplainingOutput> outs;
  std::vector<std::size_t> labels;
  std::vector<std::optional<std::vector<double>>> phis;
  for (const auto& s : d.samples) {
    if (!s.phi) throw ContractError("e_rmse: sample '" + s.id + "' has no ground-truth phi");
    outs.push_back(engine.evaluate(s.pixels));
    labels.push_back(s.label);
    phis.push_back(s.phi);
  }
  return std::sqrt(training::explanation_loss(outs, labels, phis));
}

struct NormalizedReport {
  double accuracy = 0.0;
  double e_rmse = 0.0;
  double iou_at_1 = 0.0;
  double iou_at_10 = 0.0;
  double infidelity = 0.0;
  std::string dataset;
};

inline NormalizedReport normalized_report(const MetricsReport& report, const MetricsReport& reference) {
  if (report.dataset != reference.dataset) {
    throw ContractError("normalizing '" + report.dataset + "' against a report on '" + reference.dataset + "'");
  }
  auto ratio = [](double v, double ref, const char* what) {
    if (ref == 0.0) throw UndefinedError(std::string("reference ") + what + " is zero; cannot normalize");
    return v / ref;
  };
  return {ratio(report.accuracy, reference.accuracy, "accuracy"), ratio(report.e_rmse, reference.e_rmse, "E-RMSE"),
          ratio(report.iou_at_1, reference.iou_at_1, "IoU@1"), ratio(report.iou_at_10, reference.iou_at_10, "IoU@10"),
          ratio(report.infidelity, reference.infidelity, "infidelity"), report.dataset};
}

}  // namespace xferlab::evaluation
