#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/data/dataset.hpp"
#include "xferlab/model/checkpoint.hpp"
#include "xferlab/model/inference.hpp"
#include "xferlab/training/loss.hpp"
#include "xferlab/util/structured_text.hpp"

namespace xferlab::training {

struct TrainConfig {
  double alpha = 1.0;
  double learning_rate = 3e-4;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  double grad_clip_norm = 1.0;  // <= 0 disables clipping
  std::uint64_t seed = 0;

  void validate() const {
    check_alpha(alpha);
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("moment decays must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  }

  void write(StructuredText& st, const std::string& section) const {
    st.set(section, "alpha", format_double(alpha));
    st.set(section, "learning_rate", format_double(learning_rate));
    st.set(section, "epochs", std::to_string(epochs));
    st.set(section, "batch_size", std::to_string(batch_size));
    st.set(section, "beta1", format_double(beta1));
    st.set(section, "beta2", format_double(beta2));
    st.set(section, "epsilon", format_double(epsilon));
    st.set(section, "weight_decay", format_double(weight_decay));
    st.set(section, "grad_clip_norm", format_double(grad_clip_norm));
    st.set(section, "seed", std::to_string(seed));
  }

  std::uint64_t fingerprint() const {
    return Fnv1a()
        .f64(alpha)
        .f64(learning_rate)
        .u64(epochs)
        .u64(batch_size)
        .f64(beta1)
        .f64(beta2)
        .f64(epsilon)
        .f64(weight_decay)
        .f64(grad_clip_norm)
        .u64(seed)
        .digest();
  }

  bool operator==(const TrainConfig&) const = default;
};

enum class Role { kBase, kFt, kFtStar, kAmortized };

inline std::string to_string(Role r) {
  switch (r) {
    case Role::kBase: return "base";
    case Role::kFt: return "ft";
    case Role::kFtStar: return "ft*";
    case Role::kAmortized: return "amortized";
  }
  return "?";
}

inline Role parse_role(const std::string& s) {
  if (s == "base") return Role::kBase;
  if (s == "ft") return Role::kFt;
  if (s == "ft*") return Role::kFtStar;
  if (s == "amortized") return Role::kAmortized;
  throw FormatError("unknown artifact role '" + s + "'");
}

inline Role role_for_alpha(double alpha) {
  if (alpha == 1.0) return Role::kFt;
  if (alpha == 0.0) return Role::kAmortized;
  return Role::kFtStar;
}

struct TrainedArtifact {
  std::string id;
  Role role = Role::kFt;
  model::ParameterVector theta;
  model::ModelConfig model;
  TrainConfig train;
  std::uint64_t base_fingerprint = 0;  // 0 for a base artifact
  std::uint64_t head_fingerprint = 0;
  std::string dataset;
  std::uint64_t dataset_fingerprint = 0;
  double final_train_loss = 0.0;
  std::optional<double> final_val_loss;
  std::vector<double> epoch_losses;

  std::uint64_t fingerprint() const { return theta.fingerprint(); }
};

inline StructuredText artifact_sidecar(const TrainedArtifact& a) {
  StructuredText st;
  st.set("artifact", "id", a.id);
  st.set("artifact", "role", to_string(a.role));
  st.set("artifact", "fingerprint", hex64(a.fingerprint()));
  st.set("artifact", "layout_fingerprint", hex64(a.theta.layout_fingerprint()));
  st.set("artifact", "base_fingerprint", hex64(a.base_fingerprint));
  st.set("artifact", "head_fingerprint", hex64(a.head_fingerprint));
  st.set("artifact", "dataset", a.dataset);
  st.set("artifact", "dataset_fingerprint", hex64(a.dataset_fingerprint));
  st.set("artifact", "final_train_loss", format_double(a.final_train_loss));
  if (a.final_val_loss) st.set("artifact", "final_val_loss", format_double(*a.final_val_loss));
  st.set("artifact", "epoch_losses", join_doubles(a.epoch_losses));
  const auto& m = a.model;
  st.set("model", "image_size", std::to_string(m.image_size));
  st.set("model", "patch_size", std::to_string(m.patch_size));
  st.set("model", "channels", std::to_string(m.channels));
  st.set("model", "embed_dim", std::to_string(m.embed_dim));
  st.set("model", "num_layers", std::to_string(m.num_layers));
  st.set("model", "num_heads", std::to_string(m.num_heads));
  st.set("model", "mlp_ratio", std::to_string(m.mlp_ratio));
  st.set("model", "seed", std::to_string(m.seed));
  a.train.write(st, "train");
  return st;
}

namespace detail {

inline std::uint64_t parse_hex(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError(what + ": bad hex '" + s + "'");
  return v;
}

inline std::string need(const StructuredText& st, const std::string& sec, const std::string& key,
                        const std::string& ctx) {
  auto v = st.get(sec, key);
  if (!v) throw FormatError(ctx + ": missing [" + sec + "] " + key);
  return *v;
}

}  // namespace detail

inline void save_artifact(const std::filesystem::path& checkpoint, const TrainedArtifact& a) {
  model::save_checkpoint(checkpoint, a.theta);
  auto sidecar = checkpoint;
  sidecar.replace_extension(".ini");
  write_file(sidecar, artifact_sidecar(a).serialize());
}

// Loads a checkpoint and its sidecar; the sidecar's fingerprint must match
// the parameters on disk.
inline TrainedArtifact load_artifact(const std::filesystem::path& checkpoint) {
  if (!std::filesystem::exists(checkpoint)) throw MissingArtifactError(checkpoint.string() + " does not exist");
  auto sidecar = checkpoint;
  sidecar.replace_extension(".ini");
  if (!std::filesystem::exists(sidecar)) throw MissingArtifactError(sidecar.string() + " does not exist");
  const auto ctx = sidecar.string();
  auto st = StructuredText::parse(read_file(sidecar), ctx);
  TrainedArtifact a;
  auto ck = model::load_checkpoint(checkpoint);
  a.theta = std::move(ck.params);
  a.id = detail::need(st, "artifact", "id", ctx);
  a.role = parse_role(detail::need(st, "artifact", "role", ctx));
  auto fp = detail::parse_hex(detail::need(st, "artifact", "fingerprint", ctx), ctx);
  if (fp != a.theta.fingerprint()) {
    throw FormatError(checkpoint.string() + ": parameters do not match sidecar fingerprint " + hex64(fp));
  }
  a.base_fingerprint = detail::parse_hex(detail::need(st, "artifact", "base_fingerprint", ctx), ctx);
  a.head_fingerprint = detail::parse_hex(detail::need(st, "artifact", "head_fingerprint", ctx), ctx);
  a.dataset = detail::need(st, "artifact", "dataset", ctx);
  a.dataset_fingerprint = detail::parse_hex(detail::need(st, "artifact", "dataset_fingerprint", ctx), ctx);
  a.final_train_loss = parse_double(detail::need(st, "artifact", "final_train_loss", ctx), ctx);
  if (auto v = st.get("artifact", "final_val_loss")) a.final_val_loss = parse_double(*v, ctx);
  a.epoch_losses = parse_double_list(detail::need(st, "artifact", "epoch_losses", ctx), ctx);
  auto u = [&](const std::string& sec, const std::string& key) {
    return static_cast<std::size_t>(parse_u64(detail::need(st, sec, key, ctx), ctx + " [" + sec + "] " + key));
  };
  auto d = [&](const std::string& sec, const std::string& key) {
    return parse_double(detail::need(st, sec, key, ctx), ctx + " [" + sec + "] " + key);
  };
  a.model.image_size = u("model", "image_size");
  a.model.patch_size = u("model", "patch_size");
  a.model.channels = u("model", "channels");
  a.model.embed_dim = u("model", "embed_dim");
  a.model.num_layers = u("model", "num_layers");
  a.model.num_heads = u("model", "num_heads");
  a.model.mlp_ratio = u("model", "mlp_ratio");
  a.model.seed = u("model", "seed");
  a.train.alpha = d("train", "alpha");
  a.train.learning_rate = d("train", "learning_rate");
  a.train.epochs = u("train", "epochs");
  a.train.batch_size = u("train", "batch_size");
  a.train.beta1 = d("train", "beta1");
  a.train.beta2 = d("train", "beta2");
  a.train.epsilon = d("train", "epsilon");
  a.train.weight_decay = d("train", "weight_decay");
  a.train.grad_clip_norm = d("train", "grad_clip_norm");
  a.train.seed = u("train", "seed");
  return a;
}

// Loss of the whole dataset under the current parameters, no gradients.
inline double dataset_loss(const model::ModelConfig& cfg, const model::ParameterVector& theta,
                           const model::HeadMatrix& head, const data::Dataset& d, double alpha) {
  check_alpha(alpha);
  model::InferenceEngine engine(cfg, theta, head);
  double ce = 0.0, ex = 0.0;
  std::size_t n_ex = 0;
  for (const auto& s : d.samples) {
    auto out = engine.evaluate(s.pixels);
    if (alpha > 0.0) ce += nx::cross_entropy_value(out.logits, s.label);
    if (alpha < 1.0 && s.phi) {
      ex += attribution_residual(out, s.label, *s.phi);
      ++n_ex;
    }
  }
  double cls = d.size() ? ce * (1.0 / static_cast<double>(d.size())) : 0.0;
  double exp = n_ex ? ex * (1.0 / static_cast<double>(n_ex)) : 0.0;
  return alpha * cls + (1.0 - alpha) * exp;
}

struct TrainInputs {
  std::string id;
  Role role = Role::kFt;
  std::uint64_t base_fingerprint = 0;
  const data::Dataset* validation = nullptr;
};

// Adaptive-moment descent with decoupled weight decay on the alpha-weighted
// objective. The head is a constant of the graph and never updated. Batch
// order comes from a generator seeded per epoch.
inline TrainedArtifact train(const model::ModelConfig& mcfg, const model::ParameterVector& init,
                             const data::Dataset& dataset, const model::HeadMatrix& head, const TrainConfig& cfg,
                             const TrainInputs& in) {
  cfg.validate();
  mcfg.validate();
  if (dataset.size() == 0) throw ContractError("training set '" + dataset.name + "' is empty");
  if (head.class_names != dataset.class_names) {
    throw ContractError("head classes do not match the label space of '" + dataset.name + "'");
  }
  if (cfg.alpha < 1.0 && dataset.explained_count() == 0) {
    throw ContractError("alpha < 1 needs explanation supervision, but '" + dataset.name + "' has none");
  }
  if (in.role == Role::kFt && cfg.alpha != 1.0) throw ContractError("role ft requires alpha = 1");
  if (in.role == Role::kBase && cfg.alpha != 1.0) throw ContractError("role base requires alpha = 1");
  if (in.role == Role::kFtStar && !(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    throw ContractError("role ft* requires 0 < alpha < 1");
  }

  TrainedArtifact art;
  art.id = in.id;
  art.role = in.role;
  art.model = mcfg;
  art.train = cfg;
  art.base_fingerprint = in.base_fingerprint;
  art.head_fingerprint = head.fingerprint();
  art.dataset = dataset.name;
  art.dataset_fingerprint = dataset.fingerprint();

  auto theta = init;
  auto& w = theta.mutable_values();
  const auto D = w.size();
  std::vector<double> m1(D, 0.0), m2(D, 0.0);
  std::vector<std::size_t> order(dataset.size());
  std::size_t step = 0;
  double last_epoch_loss = 0.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(derive_seed(cfg.seed, "epoch", std::to_string(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(rng)]);
    }
    double epoch_total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const auto end = std::min(order.size(), start + cfg.batch_size);
      std::vector<BatchItem> batch;
      batch.reserve(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const auto& s = dataset.samples[order[k]];
        batch.push_back({s.pixels, s.label, s.phi ? &*s.phi : nullptr});
      }
      // A batch with no explained members under alpha = 0 carries no signal.
      bool any = cfg.alpha > 0.0;
      for (const auto& b : batch) any = any || b.phi != nullptr;
      if (!any) continue;
      ++step;
      std::vector<double> grad;
      double loss = 0.0;
      try {
        model::ModelGraph mg(mcfg, theta, head, /*trainable=*/true);
        auto bl = batch_loss(mg, batch, cfg.alpha);
        loss = mg.graph().value(bl.total).item();
        mg.graph().backward(bl.total);
        grad = mg.flat_gradient();
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + ", lr " + format_double(cfg.learning_rate) + ")");
      }
      double norm2 = 0.0;
      for (double g : grad) norm2 += g * g;
      if (!std::isfinite(norm2)) {
        throw NumericError("non-finite gradient at step " + std::to_string(step) + " (epoch " +
                           std::to_string(epoch) + ", lr " + format_double(cfg.learning_rate) + ")");
      }
      const double norm = std::sqrt(norm2);
      const double clip = (cfg.grad_clip_norm > 0.0 && norm > cfg.grad_clip_norm) ? cfg.grad_clip_norm / norm : 1.0;
      const double t = static_cast<double>(step);
      const double c1 = 1.0 - std::pow(cfg.beta1, t);
      const double c2 = 1.0 - std::pow(cfg.beta2, t);
      for (std::size_t i = 0; i < D; ++i) {
        const double g = grad[i] * clip;
        m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g;
        m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g * g;
        w[i] -= cfg.learning_rate * cfg.weight_decay * w[i];
        w[i] -= cfg.learning_rate * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + cfg.epsilon);
      }
      for (double v : w) {
        if (!std::isfinite(v)) {
          throw NumericError("parameters diverged at step " + std::to_string(step) + " (lr " +
                             format_double(cfg.learning_rate) + ")");
        }
      }
      epoch_total += loss;
      ++batches;
    }
    last_epoch_loss = batches ? epoch_total / static_cast<double>(batches) : 0.0;
    art.epoch_losses.push_back(last_epoch_loss);
  }
  art.final_train_loss = cfg.epochs > 0 ? last_epoch_loss : dataset_loss(mcfg, theta, head, dataset, cfg.alpha);
  if (in.validation != nullptr) art.final_val_loss = dataset_loss(mcfg, theta, head, *in.validation, cfg.alpha);
  art.theta = std::move(theta);
  return art;
}

inline TrainedArtifact finetune(const model::ModelConfig& mcfg, const TrainedArtifact& base,
                                const data::Dataset& dataset, const model::HeadMatrix& head, const TrainConfig& cfg,
                                const std::string& id, const data::Dataset* validation = nullptr) {
  if (base.role != Role::kBase) throw ContractError("finetuning must start from a base artifact");
  return train(mcfg, base.theta, dataset, head, cfg,
               {id, role_for_alpha(cfg.alpha), base.fingerprint(), validation});
}

inline TrainedArtifact pretrain(const model::ModelConfig& mcfg, const data::Dataset& mixture,
                                const model::HeadMatrix& head, TrainConfig cfg, const std::string& id = "base") {
  if (cfg.alpha != 1.0) throw ConfigError("pretraining is classification-only (alpha = 1)");
  return train(mcfg, model::init_parameter_vector(mcfg), mixture, head, cfg, {id, Role::kBase, 0, nullptr});
}

}  // namespace xferlab::training
