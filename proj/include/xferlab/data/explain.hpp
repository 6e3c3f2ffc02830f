#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/data/dataset.hpp"
#include "xferlab/shapley/explainer.hpp"
#include "xferlab/util/hash.hpp"
#include "xferlab/util/parallel.hpp"
#include "xferlab/util/structured_text.hpp"

namespace xferlab::data {

// Indices of the samples chosen for supervision: the `subset_size` samples
// with the smallest hash(seed, id), reported in dataset order. 0 or a size
// at least the dataset size selects everything.
inline std::vector<std::size_t> select_subset(const Dataset& d, std::size_t subset_size, std::uint64_t seed) {
  std::vector<std::size_t> idx(d.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (subset_size == 0 || subset_size >= d.size()) return idx;
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  keyed.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) keyed.emplace_back(derive_seed(seed, "subset", d.samples[i].id), i);
  std::sort(keyed.begin(), keyed.end());
  idx.clear();
  for (std::size_t k = 0; k < subset_size; ++k) idx.push_back(keyed[k].second);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct AttachReport {
  std::size_t explained = 0;
  std::size_t ridge = 0;
  std::vector<std::string> failures;  // "id: message"
};

// Ground-truth attributions for the selected samples: phi explains the
// reference model's logit for the sample's own label. Samples whose
// explainer throws are left unexplained and listed in the report. Any
// previous supervision is dropped.
inline Dataset attach_explanations(const Dataset& d, const model::ModelConfig& cfg,
                                   const model::ParameterVector& reference, const model::HeadMatrix& head,
                                   const shapley::ShapConfig& shap, std::size_t subset_size, std::uint64_t seed,
                                   std::size_t workers = 1, AttachReport* report = nullptr) {
  shap.validate();
  if (head.class_names != d.class_names) {
    throw ContractError("head classes do not match the label space of dataset '" + d.name + "'");
  }
  if (d.image_values() != cfg.image_values() || d.num_patches != cfg.num_patches()) {
    throw DimensionError("dataset '" + d.name + "' geometry does not match the model config");
  }
  const auto selected = select_subset(d, subset_size, seed);
  const auto mean = d.mean_image();

  struct Slot {
    std::optional<shapley::Explanation> result;
    std::string error;
  };
  std::vector<Slot> slots(selected.size());
  parallel_for(selected.size(), workers, [&](std::size_t k) {
    const auto& s = d.samples[selected[k]];
    try {
      model::InferenceEngine engine(cfg, reference, head);
      auto baseline = shapley::make_baseline(shap.baseline, cfg, s.pixels, mean);
      auto e = shapley::explain(engine, s.pixels, s.label, baseline, shap, derive_seed(shap.seed, "explain", s.id));
      for (double v : e.phi)
        if (!std::isfinite(v)) throw NumericError("non-finite attribution");
      slots[k].result = std::move(e);
    } catch (const std::exception& ex) {
      slots[k].error = ex.what();
    }
  });

  Dataset out = d;
  for (auto& s : out.samples) s.phi.reset();
  AttachReport rep;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    auto& s = out.samples[selected[k]];
    if (slots[k].result) {
      s.phi = std::move(slots[k].result->phi);
      ++rep.explained;
      rep.ridge += slots[k].result->ridge_applied ? 1 : 0;
    } else {
      rep.failures.push_back(s.id + ": " + slots[k].error);
      std::cerr << "warning: explanation skipped for " << s.id << ": " << slots[k].error << "\n";
    }
  }
  if (rep.ridge > 0) {
    std::cerr << "warning: " << rep.ridge << " kernel_shap solves on '" << d.name
              << "' were singular and used ridge regularization\n";
  }
  out.set_meta("explainer", shapley::to_string(shap.kind));
  out.set_meta("budget", shap.kind == shapley::ExplainerKind::kKernel ? std::to_string(shap.budget) : "all");
  out.set_meta("baseline", shap.baseline);
  out.set_meta("value", "logit");
  out.set_meta("explainer_seed", std::to_string(shap.seed));
  out.set_meta("subset_seed", std::to_string(seed));
  out.set_meta("reference_fingerprint", hex64(reference.fingerprint()));
  out.set_meta("head_fingerprint", hex64(head.fingerprint()));
  out.set_meta("explained", std::to_string(rep.explained));
  out.set_meta("fraction", format_double(d.size() == 0 ? 0.0 : static_cast<double>(rep.explained) /
                                                                   static_cast<double>(d.size())));
  out.set_meta("explained_split", d.split);
  if (report != nullptr) *report = std::move(rep);
  return out;
}

}  // namespace xferlab::data
