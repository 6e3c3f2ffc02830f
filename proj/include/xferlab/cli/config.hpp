#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xferlab/arithmetic/task_vector.hpp"
#include "xferlab/data/synthetic.hpp"
#include "xferlab/evaluation/metrics.hpp"
#include "xferlab/model/config.hpp"
#include "xferlab/shapley/explainer.hpp"
#include "xferlab/training/trainer.hpp"
#include "xferlab/util/binio.hpp"
#include "xferlab/util/hash.hpp"
#include "xferlab/util/structured_text.hpp"

namespace xferlab::cli {

// Experiment configuration file grammar (structured text):
//
//   [experiment]  name, seed, source, target, out, oracle
//   [model]       image_size, patch_size, channels, embed_dim, num_layers,
//                 num_heads, mlp_ratio
//   [data]        train_size, test_size, mixture_size, mixture_color
//   [domain.NAME] family, classes, glyph_count, background, noise, color
//   [pretrain]    learning_rate, epochs, batch_size, beta1, beta2, epsilon,
//   [finetune]      weight_decay, grad_clip_norm
//   [shap]        explainer, budget, baseline, train_subset, test_subset
//   [transfer]    alpha_grid, lambda1, lambda2_grid, min_accuracy
//   [eval]        draws, drop_probability, iou_small_k, iou_large_k
//   [study]       domains, alpha, lambda2
//   [budget]      budgets, images, k
//
// Every seed is derived from the master seed; unknown sections and keys are
// rejected.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::filesystem::path out;
  bool oracle = false;

  model::ModelConfig model;
  std::size_t train_size = 48;
  std::size_t test_size = 24;
  std::size_t mixture_size = 96;
  std::array<double, 3> mixture_color = {0.85, 0.85, 0.85};
  std::vector<data::DomainSpec> domains;  // declaration order
  std::string source, target;

  training::TrainConfig pretrain;
  training::TrainConfig finetune;
  shapley::ShapConfig shap;
  std::size_t train_subset = 0;  // 0 explains every sample
  std::size_t test_subset = 0;

  std::vector<double> alpha_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double lambda1 = 1.0;
  std::vector<double> lambda2_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2};
  double min_accuracy = 0.9;

  evaluation::EvalConfig eval;

  std::vector<std::string> study_domains;
  double study_alpha = 0.5;
  double study_lambda2 = 1.0;

  std::vector<std::size_t> budgets = {10, 25, 50, 100, 200};
  std::size_t budget_images = 20;
  std::size_t budget_k = 10;

  data::ImageGeometry geometry() const { return {model.image_size, model.patch_size, model.channels}; }

  const data::DomainSpec& domain(const std::string& domain_name) const {
    for (const auto& d : domains)
      if (d.name == domain_name) return d;
    throw ConfigError("unknown domain '" + domain_name + "'");
  }

  std::uint64_t registry_seed() const { return derive_seed(seed, "registry", "heads"); }

  // Seeds are a pure function of the master seed; changing it re-derives
  // every stochastic component.
  void derive_seeds() {
    model.seed = derive_seed(seed, "model", "init");
    for (auto& d : domains) d.seed = derive_seed(seed, "domain", d.name);
    pretrain.seed = derive_seed(seed, "train", "base");
    shap.seed = derive_seed(seed, "shap", "supervision");
    eval.infidelity.seed = derive_seed(seed, "eval", "infidelity");
  }

  // Shared by every run on one domain so ft and ft* differ only by the
  // explanation term.
  std::uint64_t finetune_seed(const std::string& domain_name) const {
    return derive_seed(seed, "finetune", domain_name);
  }

  void validate() const {
    model.validate();
    geometry().validate();
    if (train_size == 0 || test_size == 0 || mixture_size == 0) throw ConfigError("[data] sizes must be positive");
    for (double c : mixture_color)
      if (!(c >= 0.0 && c <= 1.0)) throw ConfigError("[data] mixture_color channels must lie in [0, 1]");
    if (domains.empty()) throw ConfigError("no [domain.NAME] sections");
    std::set<std::string> names;
    for (const auto& d : domains) {
      d.validate(geometry());
      if (!names.insert(d.name).second) throw ConfigError("domain '" + d.name + "' declared twice");
    }
    if (!source.empty()) domain(source);
    if (!target.empty()) domain(target);
    pretrain.validate();
    finetune.validate();
    shap.validate();
    if (alpha_grid.empty()) throw ConfigError("[transfer] alpha_grid is empty");
    if (lambda2_grid.empty()) throw ConfigError("[transfer] lambda2_grid is empty");
    for (double a : alpha_grid)
      if (!(a > 0.0 && a < 1.0)) throw ConfigError("[transfer] alpha_grid values must lie in (0, 1)");
    for (double l : lambda2_grid)
      if (!std::isfinite(l)) throw ConfigError("[transfer] lambda2_grid values must be finite");
    if (!std::isfinite(lambda1)) throw ConfigError("[transfer] lambda1 must be finite");
    if (!(min_accuracy >= 0.0 && min_accuracy <= 1.0)) throw ConfigError("[transfer] min_accuracy must lie in [0, 1]");
    eval.infidelity.validate();
    if (eval.iou_small_k == 0 || eval.iou_large_k == 0) throw ConfigError("[eval] IoU K must be positive");
    for (const auto& d : study_domains) domain(d);
    if (!study_domains.empty()) {
      if (std::find(alpha_grid.begin(), alpha_grid.end(), study_alpha) == alpha_grid.end()) {
        throw ConfigError("[study] alpha must be one of the alpha_grid values");
      }
      if (std::find(lambda2_grid.begin(), lambda2_grid.end(), study_lambda2) == lambda2_grid.end()) {
        throw ConfigError("[study] lambda2 must be one of the lambda2_grid values");
      }
    }
    if (budgets.empty()) throw ConfigError("[budget] budgets is empty");
    for (auto b : budgets)
      if (b == 0) throw ConfigError("[budget] budgets must be positive");
    if (budget_images == 0 || budget_k == 0) throw ConfigError("[budget] images and k must be positive");
  }

  // Canonical text form; its hash keys resumable artifacts.
  StructuredText to_text() const;
};

namespace detail {

// Reads typed values from one section and remembers which keys were used.
class SectionReader {
 public:
  SectionReader(const StructuredText& st, std::string section, std::string origin)
      : st_(st), section_(std::move(section)), origin_(std::move(origin)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    return st_.get(section_, key);
  }
  std::string what(const std::string& key) const { return origin_ + ": [" + section_ + "] " + key; }

  void str(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void size(const std::string& key, std::size_t& out) {
    if (auto v = raw(key)) out = static_cast<std::size_t>(parse_u64(*v, what(key)));
  }
  void u64(const std::string& key, std::uint64_t& out) {
    if (auto v = raw(key)) out = parse_u64(*v, what(key));
  }
  void real(const std::string& key, double& out) {
    if (auto v = raw(key)) out = parse_double(*v, what(key));
  }
  void boolean(const std::string& key, bool& out) {
    if (auto v = raw(key)) out = parse_bool(*v, what(key));
  }
  void reals(const std::string& key, std::vector<double>& out) {
    if (auto v = raw(key)) out = parse_double_list(*v, what(key));
  }
  void sizes(const std::string& key, std::vector<std::size_t>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(static_cast<std::size_t>(parse_u64(item, what(key))));
    }
  }
  void strings(const std::string& key, std::vector<std::string>& out) {
    if (auto v = raw(key)) out = split_list(*v);
  }
  void color(const std::string& key, std::array<double, 3>& out) {
    if (auto v = raw(key)) {
      auto c = parse_double_list(*v, what(key));
      if (c.size() != 3) throw ConfigError(what(key) + ": expected three channel values");
      out = {c[0], c[1], c[2]};
    }
  }

  void reject_unknown() const {
    const auto* s = st_.find_section(section_);
    if (s == nullptr) return;
    for (const auto& [k, v] : s->entries) {
      if (!used_.count(k)) throw ConfigError(origin_ + ": unknown key '" + k + "' in [" + section_ + "]");
    }
  }

 private:
  const StructuredText& st_;
  std::string section_;
  std::string origin_;
  std::set<std::string> used_;
};

inline void read_train(SectionReader& r, training::TrainConfig& t) {
  r.real("learning_rate", t.learning_rate);
  r.size("epochs", t.epochs);
  r.size("batch_size", t.batch_size);
  r.real("beta1", t.beta1);
  r.real("beta2", t.beta2);
  r.real("epsilon", t.epsilon);
  r.real("weight_decay", t.weight_decay);
  r.real("grad_clip_norm", t.grad_clip_norm);
}

inline void write_train(StructuredText& st, const std::string& sec, const training::TrainConfig& t) {
  st.set(sec, "learning_rate", format_double(t.learning_rate));
  st.set(sec, "epochs", std::to_string(t.epochs));
  st.set(sec, "batch_size", std::to_string(t.batch_size));
  st.set(sec, "beta1", format_double(t.beta1));
  st.set(sec, "beta2", format_double(t.beta2));
  st.set(sec, "epsilon", format_double(t.epsilon));
  st.set(sec, "weight_decay", format_double(t.weight_decay));
  st.set(sec, "grad_clip_norm", format_double(t.grad_clip_norm));
}

inline std::string sizes_text(const std::vector<std::size_t>& v) {
  std::vector<std::string> s;
  for (auto x : v) s.push_back(std::to_string(x));
  return join_strings(s);
}

}  // namespace detail

inline constexpr std::string_view kDomainPrefix = "domain.";

inline ExperimentConfig parse_experiment_config(std::string_view text, const std::string& origin = "<config>") {
  const auto st = StructuredText::parse(text, origin);
  static const std::set<std::string> known = {"experiment", "model",    "data", "pretrain", "finetune", "shap",
                                              "transfer",   "eval",     "study", "budget"};
  ExperimentConfig c;
  for (const auto& s : st.sections()) {
    if (s.name.rfind(kDomainPrefix, 0) == 0) continue;
    if (s.name.empty()) throw ConfigError(origin + ": keys outside any section");
    if (!known.count(s.name)) throw ConfigError(origin + ": unknown section [" + s.name + "]");
  }
  using detail::SectionReader;
  {
    SectionReader r(st, "experiment", origin);
    r.str("name", c.name);
    r.u64("seed", c.seed);
    r.str("source", c.source);
    r.str("target", c.target);
    std::string out;
    r.str("out", out);
    if (!out.empty()) c.out = out;
    r.boolean("oracle", c.oracle);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "model", origin);
    r.size("image_size", c.model.image_size);
    r.size("patch_size", c.model.patch_size);
    r.size("channels", c.model.channels);
    r.size("embed_dim", c.model.embed_dim);
    r.size("num_layers", c.model.num_layers);
    r.size("num_heads", c.model.num_heads);
    r.size("mlp_ratio", c.model.mlp_ratio);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "data", origin);
    r.size("train_size", c.train_size);
    r.size("test_size", c.test_size);
    r.size("mixture_size", c.mixture_size);
    r.color("mixture_color", c.mixture_color);
    r.reject_unknown();
  }
  for (const auto& s : st.sections()) {
    if (s.name.rfind(kDomainPrefix, 0) != 0) continue;
    data::DomainSpec d;
    d.name = s.name.substr(kDomainPrefix.size());
    SectionReader r(st, s.name, origin);
    r.str("family", d.family);
    r.strings("classes", d.class_names);
    r.size("glyph_count", d.glyph_count);
    r.str("background", d.background);
    r.real("noise", d.noise);
    r.color("color", d.color);
    r.reject_unknown();
    c.domains.push_back(std::move(d));
  }
  {
    SectionReader r(st, "pretrain", origin);
    detail::read_train(r, c.pretrain);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "finetune", origin);
    detail::read_train(r, c.finetune);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "shap", origin);
    if (auto v = r.raw("explainer")) c.shap.kind = shapley::parse_explainer_kind(*v);
    r.size("budget", c.shap.budget);
    r.str("baseline", c.shap.baseline);
    r.size("train_subset", c.train_subset);
    r.size("test_subset", c.test_subset);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "transfer", origin);
    r.reals("alpha_grid", c.alpha_grid);
    r.real("lambda1", c.lambda1);
    r.reals("lambda2_grid", c.lambda2_grid);
    r.real("min_accuracy", c.min_accuracy);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "eval", origin);
    r.size("draws", c.eval.infidelity.draws);
    r.real("drop_probability", c.eval.infidelity.drop_probability);
    r.size("iou_small_k", c.eval.iou_small_k);
    r.size("iou_large_k", c.eval.iou_large_k);
    c.eval.baseline = c.shap.baseline;
    r.reject_unknown();
  }
  {
    SectionReader r(st, "study", origin);
    r.strings("domains", c.study_domains);
    r.real("alpha", c.study_alpha);
    r.real("lambda2", c.study_lambda2);
    r.reject_unknown();
  }
  {
    SectionReader r(st, "budget", origin);
    r.sizes("budgets", c.budgets);
    r.size("images", c.budget_images);
    r.size("k", c.budget_k);
    r.reject_unknown();
  }
  if (c.out.empty()) c.out = std::filesystem::path("runs") / c.name;
  c.derive_seeds();
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
  return parse_experiment_config(read_file(path), path.string());
}

inline StructuredText ExperimentConfig::to_text() const {
  StructuredText st;
  st.set("experiment", "name", name);
  st.set("experiment", "seed", std::to_string(seed));
  st.set("experiment", "source", source);
  st.set("experiment", "target", target);
  st.set("experiment", "oracle", oracle ? "true" : "false");
  st.set("model", "image_size", std::to_string(model.image_size));
  st.set("model", "patch_size", std::to_string(model.patch_size));
  st.set("model", "channels", std::to_string(model.channels));
  st.set("model", "embed_dim", std::to_string(model.embed_dim));
  st.set("model", "num_layers", std::to_string(model.num_layers));
  st.set("model", "num_heads", std::to_string(model.num_heads));
  st.set("model", "mlp_ratio", std::to_string(model.mlp_ratio));
  st.set("data", "train_size", std::to_string(train_size));
  st.set("data", "test_size", std::to_string(test_size));
  st.set("data", "mixture_size", std::to_string(mixture_size));
  st.set("data", "mixture_color", join_doubles(mixture_color));
  for (const auto& d : domains) {
    const auto sec = std::string(kDomainPrefix) + d.name;
    st.set(sec, "family", d.family);
    st.set(sec, "classes", join_strings(d.class_names));
    st.set(sec, "glyph_count", std::to_string(d.glyph_count));
    st.set(sec, "background", d.background);
    st.set(sec, "noise", format_double(d.noise));
    st.set(sec, "color", join_doubles(d.color));
  }
  detail::write_train(st, "pretrain", pretrain);
  detail::write_train(st, "finetune", finetune);
  st.set("shap", "explainer", shapley::to_string(shap.kind));
  st.set("shap", "budget", std::to_string(shap.budget));
  st.set("shap", "baseline", shap.baseline);
  st.set("shap", "train_subset", std::to_string(train_subset));
  st.set("shap", "test_subset", std::to_string(test_subset));
  st.set("transfer", "alpha_grid", join_doubles(alpha_grid));
  st.set("transfer", "lambda1", format_double(lambda1));
  st.set("transfer", "lambda2_grid", join_doubles(lambda2_grid));
  st.set("transfer", "min_accuracy", format_double(min_accuracy));
  st.set("eval", "draws", std::to_string(eval.infidelity.draws));
  st.set("eval", "drop_probability", format_double(eval.infidelity.drop_probability));
  st.set("eval", "iou_small_k", std::to_string(eval.iou_small_k));
  st.set("eval", "iou_large_k", std::to_string(eval.iou_large_k));
  st.set("study", "domains", join_strings(study_domains));
  st.set("study", "alpha", format_double(study_alpha));
  st.set("study", "lambda2", format_double(study_lambda2));
  st.set("budget", "budgets", detail::sizes_text(budgets));
  st.set("budget", "images", std::to_string(budget_images));
  st.set("budget", "k", std::to_string(budget_k));
  return st;
}

}  // namespace xferlab::cli
