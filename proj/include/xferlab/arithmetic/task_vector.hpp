#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/model/checkpoint.hpp"
#include "xferlab/model/parameters.hpp"
#include "xferlab/numerics/exact_sum.hpp"
#include "xferlab/training/trainer.hpp"
#include "xferlab/util/structured_text.hpp"

namespace xferlab::arithmetic {

using model::ParameterVector;

inline constexpr const char* kDeltaFinetune = "ft-base";
inline constexpr const char* kDeltaExplain = "ft*-ft";

struct Provenance {
  std::string base_id;  // subtrahend artifact
  std::string ft_id;    // minuend artifact
  std::string delta;    // "ft-base", "ft*-ft", or a derived expression

  bool operator==(const Provenance&) const = default;
};

// A task vector keeps, besides its rounded values, the exact linear
// combination of parameter vectors it stands for. Arithmetic that returns to
// parameter space evaluates that combination with a single correctly rounded
// sum per coordinate, so results are independent of term order and exact
// identities (tau + base = ft, self-transfer, analogy) hold bit-for-bit.
class TaskVector {
 public:
  struct Term {
    double coefficient;
    std::shared_ptr<const ParameterVector> params;
  };

  TaskVector(std::vector<Term> terms, Provenance provenance) : terms_(std::move(terms)), prov_(std::move(provenance)) {
    if (terms_.empty()) throw ContractError("task vector without terms");
    for (const auto& t : terms_) {
      if (!t.params) throw ContractError("task vector term without parameters");
      if (!std::isfinite(t.coefficient)) throw NumericError("non-finite task vector coefficient");
      model::require_compatible(*terms_[0].params, *t.params, "task vector");
    }
    materialize();
  }

  // A vector known only by its values (e.g. loaded from disk).
  static TaskVector from_values(ParameterVector values, Provenance provenance) {
    return TaskVector({{1.0, std::make_shared<const ParameterVector>(std::move(values))}}, std::move(provenance));
  }

  const ParameterVector& as_parameters() const { return values_; }
  std::span<const double> values() const { return values_.values(); }
  std::size_t size() const { return values_.size(); }
  std::uint64_t layout_fingerprint() const { return values_.layout_fingerprint(); }
  const std::vector<Term>& terms() const { return terms_; }
  const Provenance& provenance() const { return prov_; }

  double norm() const {
    double s = 0.0;
    for (double v : values()) s += v * v;
    return std::sqrt(s);
  }

  // sum_i c_i * tau_i as one task vector.
  static TaskVector combine(const std::vector<std::pair<double, const TaskVector*>>& parts, Provenance provenance) {
    std::vector<Term> terms;
    for (const auto& [c, tv] : parts) {
      for (const auto& t : tv->terms_) {
        // c * t.coefficient may round; keep its error as a second term so the
        // combination stays exact.
        const double p = c * t.coefficient;
        const double e = std::fma(c, t.coefficient, -p);
        terms.push_back({p, t.params});
        if (e != 0.0) terms.push_back({e, t.params});
      }
    }
    return TaskVector(std::move(terms), std::move(provenance));
  }

 private:
  void materialize() {
    const auto& first = *terms_[0].params;
    std::vector<double> out(first.size());
    numerics::ExactAccumulator acc;
    for (std::size_t i = 0; i < out.size(); ++i) {
      acc.clear();
      for (const auto& t : terms_) acc.add_product(t.coefficient, t.params->values()[i]);
      out[i] = acc.result();
    }
    values_ = ParameterVector(first.shared_layout(), std::move(out));
  }

  std::vector<Term> terms_;
  Provenance prov_;
  ParameterVector values_;
};

inline std::shared_ptr<const ParameterVector> share(const ParameterVector& p) {
  return std::make_shared<const ParameterVector>(p);
}

// tau = theta_ft - theta_base.
inline TaskVector task_vector(const ParameterVector& ft, const ParameterVector& base, const std::string& ft_id = "ft",
                              const std::string& base_id = "base") {
  model::require_compatible(ft, base, "task_vector");
  return TaskVector({{1.0, share(ft)}, {-1.0, share(base)}}, {base_id, ft_id, kDeltaFinetune});
}

inline TaskVector task_vector(const training::TrainedArtifact& ft, const training::TrainedArtifact& base) {
  if (ft.base_fingerprint != base.fingerprint()) {
    throw CompatibilityError("artifact '" + ft.id + "' was not trained from base '" + base.id + "'");
  }
  return task_vector(ft.theta, base.theta, ft.id, base.id);
}

// tau_star = theta_ft* - theta_ft.
inline TaskVector explainability_vector(const ParameterVector& ft_star, const ParameterVector& ft,
                                        const std::string& ft_star_id = "ft*", const std::string& ft_id = "ft") {
  model::require_compatible(ft_star, ft, "explainability_vector");
  return TaskVector({{1.0, share(ft_star)}, {-1.0, share(ft)}}, {ft_id, ft_star_id, kDeltaExplain});
}

inline TaskVector explainability_vector(const training::TrainedArtifact& ft_star, const training::TrainedArtifact& ft) {
  if (ft_star.role != training::Role::kFtStar || ft.role != training::Role::kFt) {
    throw ContractError("explainability_vector needs (ft*, ft) artifacts, got (" + training::to_string(ft_star.role) +
                        ", " + training::to_string(ft.role) + ")");
  }
  if (ft_star.base_fingerprint != ft.base_fingerprint) {
    throw CompatibilityError("'" + ft_star.id + "' and '" + ft.id + "' come from different base models");
  }
  if (ft_star.dataset != ft.dataset) {
    throw ContractError("'" + ft_star.id + "' and '" + ft.id + "' were trained on different datasets");
  }
  return explainability_vector(ft_star.theta, ft.theta, ft_star.id, ft.id);
}

inline void require_compatible(const TaskVector& a, const TaskVector& b, const std::string& what) {
  model::require_compatible(a.as_parameters(), b.as_parameters(), what);
}

// tau_D = tau_C - tau_A + tau_B.
inline TaskVector analogy(const TaskVector& c, const TaskVector& a, const TaskVector& b) {
  require_compatible(c, a, "analogy");
  require_compatible(c, b, "analogy");
  Provenance p{a.provenance().ft_id, c.provenance().ft_id,
               "(" + c.provenance().delta + ")-(" + a.provenance().delta + ")+(" + b.provenance().delta + ")"};
  return TaskVector::combine({{1.0, &c}, {-1.0, &a}, {1.0, &b}}, std::move(p));
}

// theta_base + sum lambda_m tau_m, one correctly rounded sum per coordinate.
inline ParameterVector apply(const ParameterVector& base, const std::vector<std::pair<double, const TaskVector*>>& terms) {
  for (const auto& [lambda, tv] : terms) {
    if (!std::isfinite(lambda)) throw NumericError("non-finite scaling coefficient");
    model::require_compatible(base, tv->as_parameters(), "apply");
  }
  if (terms.empty()) return base;
  std::vector<double> out(base.size());
  numerics::ExactAccumulator acc;
  const auto b = base.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    acc.clear();
    acc.add(b[i]);
    for (const auto& [lambda, tv] : terms) {
      for (const auto& t : tv->terms()) {
        const double p = lambda * t.coefficient;
        const double e = std::fma(lambda, t.coefficient, -p);
        const double v = t.params->values()[i];
        acc.add_product(p, v);
        if (e != 0.0) acc.add_product(e, v);
      }
    }
    out[i] = acc.result();
  }
  return ParameterVector(base.shared_layout(), std::move(out));
}

inline ParameterVector apply(const ParameterVector& base, const std::vector<std::pair<double, TaskVector>>& terms) {
  std::vector<std::pair<double, const TaskVector*>> refs;
  for (const auto& [l, tv] : terms) refs.emplace_back(l, &tv);
  return arithmetic::apply(base, refs);
}

struct TransferConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.0;

  void validate() const {
    if (!std::isfinite(lambda1) || !std::isfinite(lambda2)) throw ConfigError("transfer coefficients must be finite");
  }
};

// theta~ = theta_base + lambda1 tau^T_ft + lambda2 tau^S_star.
inline ParameterVector transfer(const ParameterVector& base, const TaskVector& target_ft,
                                const TaskVector& source_star, const TransferConfig& cfg) {
  cfg.validate();
  if (source_star.provenance().delta != kDeltaExplain) {
    throw ContractError("transfer expects an explainability vector (ft*-ft), got '" + source_star.provenance().delta +
                        "'");
  }
  return arithmetic::apply(base, std::vector<std::pair<double, const TaskVector*>>{{cfg.lambda1, &target_ft},
                                                                       {cfg.lambda2, &source_star}});
}

inline double cosine_similarity(const TaskVector& a, const TaskVector& b) {
  require_compatible(a, b, "cosine_similarity");
  double dot = 0.0, na = 0.0, nb = 0.0;
  auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
    na += x[i] * x[i];
    nb += y[i] * y[i];
  }
  if (na == 0.0 || nb == 0.0) throw UndefinedError("cosine similarity of a zero task vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

// Values go to a checkpoint; provenance to the sidecar. A reloaded vector has
// a single term (its values).
inline void save_task_vector(const std::filesystem::path& path, const TaskVector& tv) {
  model::save_checkpoint(path, tv.as_parameters());
  StructuredText st;
  st.set("task_vector", "base_id", tv.provenance().base_id);
  st.set("task_vector", "ft_id", tv.provenance().ft_id);
  st.set("task_vector", "delta", tv.provenance().delta);
  st.set("task_vector", "layout_fingerprint", hex64(tv.layout_fingerprint()));
  st.set("task_vector", "fingerprint", hex64(tv.as_parameters().fingerprint()));
  auto sidecar = path;
  sidecar.replace_extension(".ini");
  write_file(sidecar, st.serialize());
}

inline TaskVector load_task_vector(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar.replace_extension(".ini");
  if (!std::filesystem::exists(path) || !std::filesystem::exists(sidecar)) {
    throw MissingArtifactError("task vector " + path.string() + " or its sidecar is missing");
  }
  auto st = StructuredText::parse(read_file(sidecar), sidecar.string());
  auto ck = model::load_checkpoint(path);
  auto get = [&](const char* key) {
    auto v = st.get("task_vector", key);
    if (!v) throw FormatError(sidecar.string() + ": missing [task_vector] " + key);
    return *v;
  };
  if (get("fingerprint") != hex64(ck.params.fingerprint())) {
    throw FormatError(path.string() + ": values do not match sidecar fingerprint");
  }
  return TaskVector::from_values(std::move(ck.params), {get("base_id"), get("ft_id"), get("delta")});
}

}  // namespace xferlab::arithmetic
