#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xferlab/arithmetic/task_vector.hpp"
#include "xferlab/cli/config.hpp"
#include "xferlab/cli/manifest.hpp"
#include "xferlab/data/explain.hpp"
#include "xferlab/data/synthetic.hpp"
#include "xferlab/evaluation/metrics.hpp"
#include "xferlab/model/checkpoint.hpp"
#include "xferlab/model/head.hpp"
#include "xferlab/training/trainer.hpp"

namespace xferlab::cli {

namespace fs = std::filesystem;

// Stage names; a command may only produce artifacts of the stages it owns.
inline constexpr const char* kStageData = "gen-data";
inline constexpr const char* kStagePretrain = "pretrain";
inline constexpr const char* kStageExplain = "explain";
inline constexpr const char* kStageFinetune = "finetune";
inline constexpr const char* kStageTransfer = "transfer";

struct RunOptions {
  bool resume = false;
  std::size_t workers = 1;
  bool quiet = false;
};

// Produces and caches the artifacts of one run directory. An artifact is
// reused when the manifest holds it under the same input hash and its
// content verifies, provided the current command does not own its stage or
// --resume was given. Otherwise an owned artifact is recomputed, an artifact
// of a `fill` stage is computed only when absent, and any other one is
// reported missing.
class Workspace {
 public:
  Workspace(ExperimentConfig cfg, RunOptions opt, std::set<std::string> producing,
            std::set<std::string> fill = {})
      : cfg_(std::move(cfg)),
        opt_(opt),
        producing_(std::move(producing)),
        fill_(std::move(fill)),
        manifest_(RunManifest::open(cfg_.out)) {
    make_directories(cfg_.out);
    manifest_.set_run("name", cfg_.name);
    manifest_.set_run("seed", std::to_string(cfg_.seed));
    manifest_.set_run("config_fingerprint", hex64(config_fingerprint()));
    manifest_.set_run("tool_version", kToolVersion);
    manifest_.save();
  }

  const ExperimentConfig& config() const { return cfg_; }
  const RunOptions& options() const { return opt_; }
  RunManifest& manifest() { return manifest_; }
  const fs::path& dir() const { return cfg_.out; }

  std::uint64_t config_fingerprint() const {
    auto text = cfg_.to_text().serialize();
    return Fnv1a().str(text).digest();
  }

  void log(const std::string& msg) const {
    if (!opt_.quiet) std::cerr << "xferlab: " << msg << "\n";
  }

  // Domains whose label spaces the base model is pretrained on.
  std::vector<data::DomainSpec> mixture_domains() const { return cfg_.domains; }

  model::HeadMatrix head(const std::string& domain) const {
    return model::make_head(cfg_.domain(domain).class_names, cfg_.model.embed_dim, cfg_.registry_seed());
  }

  const data::Dataset& mixture() {
    Fnv1a h;
    h.str("mixture").u64(cfg_.mixture_size).u64(cfg_.seed);
    for (double c : cfg_.mixture_color) h.f64(c);
    for (const auto& d : mixture_domains()) h.u64(spec_hash(d));
    return obtain_dataset("data/mixture", kStageData, h.digest(), "data/mixture.sevd", [&] {
      return data::gen_mixture(mixture_domains(), cfg_.geometry(), cfg_.mixture_size, cfg_.mixture_color,
                               derive_seed(cfg_.seed, "mixture", "pretrain"));
    });
  }

  // which = "train" or "test"
  const data::Dataset& split(const std::string& domain, const std::string& which) {
    const auto& spec = cfg_.domain(domain);
    const auto n = which == "train" ? cfg_.train_size : cfg_.test_size;
    const auto inputs = Fnv1a().str("split").u64(spec_hash(spec)).str(which).u64(n).digest();
    return obtain_dataset("data/" + domain + "/" + which, kStageData, inputs, "data/" + domain + "_" + which + ".sevd",
                          [&] { return data::gen_split(spec, cfg_.geometry(), which, n); });
  }

  const training::TrainedArtifact& base() {
    const auto& mix = mixture();
    const auto mixture_head = model::make_head(mix.class_names, cfg_.model.embed_dim, cfg_.registry_seed());
    const auto inputs = Fnv1a()
                            .str("base")
                            .u64(cfg_.model.fingerprint())
                            .u64(cfg_.pretrain.fingerprint())
                            .u64(mix.fingerprint())
                            .u64(mixture_head.fingerprint())
                            .digest();
    return obtain_model("model/base", kStagePretrain, inputs, "models/base.sevx",
                        [&] { return training::pretrain(cfg_.model, mix, mixture_head, cfg_.pretrain, "base"); });
  }

  training::TrainConfig finetune_config(const std::string& domain, double alpha) const {
    auto t = cfg_.finetune;
    t.alpha = alpha;
    t.seed = cfg_.finetune_seed(domain);
    return t;
  }

  // Classification-only finetuning on the domain's training split.
  const training::TrainedArtifact& ft(const std::string& domain) {
    const auto& b = base();
    const auto& train = split(domain, "train");
    const auto h = head(domain);
    const auto tc = finetune_config(domain, 1.0);
    const auto inputs =
        Fnv1a().str("ft").u64(b.fingerprint()).u64(train.fingerprint()).u64(tc.fingerprint()).u64(h.fingerprint()).digest();
    return obtain_model("model/" + domain + "/ft", kStageFinetune, inputs, "models/" + domain + "_ft.sevx",
                        [&] { return training::finetune(cfg_.model, b, train, h, tc, domain + "/ft"); });
  }

  // The split with ground-truth attributions of the domain's ft model.
  const data::Dataset& explained(const std::string& domain, const std::string& which) {
    const auto& d = split(domain, which);
    const auto& ref = ft(domain);
    const auto h = head(domain);
    const auto subset = which == "train" ? cfg_.train_subset : cfg_.test_subset;
    const auto subset_seed = derive_seed(cfg_.seed, "subset", domain + "/" + which);
    const auto inputs = Fnv1a()
                            .str("explained")
                            .u64(d.fingerprint())
                            .u64(ref.fingerprint())
                            .u64(h.fingerprint())
                            .str(shapley::to_string(cfg_.shap.kind))
                            .u64(cfg_.shap.budget)
                            .str(cfg_.shap.baseline)
                            .u64(cfg_.shap.seed)
                            .u64(subset)
                            .u64(subset_seed)
                            .digest();
    return obtain_dataset("data/" + domain + "/" + which + "_explained", kStageExplain, inputs,
                          "data/" + domain + "_" + which + "_explained.sevd", [&] {
                            data::AttachReport rep;
                            auto out = data::attach_explanations(d, cfg_.model, ref.theta, h, cfg_.shap, subset,
                                                                 subset_seed, opt_.workers, &rep);
                            if (rep.explained == 0) {
                              throw NumericError("no sample of '" + d.name + "' could be explained");
                            }
                            return out;
                          });
  }

  // Finetuning on the explained training split under L_alpha.
  const training::TrainedArtifact& ft_star(const std::string& domain, double alpha) {
    const auto& b = base();
    const auto& train = explained(domain, "train");
    const auto h = head(domain);
    const auto tc = finetune_config(domain, alpha);
    const auto inputs = Fnv1a()
                            .str("ft*")
                            .u64(b.fingerprint())
                            .u64(train.fingerprint())
                            .u64(tc.fingerprint())
                            .u64(h.fingerprint())
                            .digest();
    const auto tag = format_double(alpha);
    return obtain_model("model/" + domain + "/ft*/" + tag, kStageFinetune, inputs,
                        "models/" + domain + "_ftstar_a" + tag + ".sevx",
                        [&] { return training::finetune(cfg_.model, b, train, h, tc, domain + "/ft*/a" + tag); });
  }

  arithmetic::TaskVector tau_ft(const std::string& domain) { return arithmetic::task_vector(ft(domain), base()); }

  arithmetic::TaskVector tau_star(const std::string& domain, double alpha) {
    return arithmetic::explainability_vector(ft_star(domain, alpha), ft(domain));
  }

  // theta_base + lambda1 tau^T_ft + lambda2 tau^S_star(alpha).
  const model::ParameterVector& transferred(const std::string& source, const std::string& target, double alpha,
                                            double lambda2) {
    const auto& b = base();
    const auto& tft = ft(target);
    const auto& sft = ft(source);
    const auto& sstar = ft_star(source, alpha);
    const auto inputs = Fnv1a()
                            .str("transfer")
                            .u64(b.fingerprint())
                            .u64(tft.fingerprint())
                            .u64(sft.fingerprint())
                            .u64(sstar.fingerprint())
                            .f64(cfg_.lambda1)
                            .f64(lambda2)
                            .digest();
    const auto tag = source + "_to_" + target + "_a" + format_double(alpha) + "_l" + format_double(lambda2);
    const auto key = "model/transfer/" + source + "->" + target + "/a" + format_double(alpha) + "/l" +
                     format_double(lambda2);
    return obtain<model::ParameterVector>(
        vectors_, key, kStageTransfer, inputs, "models/transfer/" + tag + ".sevx", "checkpoint",
        [&] {
          auto tau_t = arithmetic::task_vector(tft, b);
          auto tau_s = arithmetic::explainability_vector(sstar, sft);
          return arithmetic::transfer(b.theta, tau_t, tau_s, {cfg_.lambda1, lambda2});
        },
        [](const fs::path& p, const model::ParameterVector& v) { model::save_checkpoint(p, v); },
        [](const fs::path& p) { return model::load_checkpoint(p).params; },
        [](const model::ParameterVector& v) { return v.fingerprint(); });
  }

  // Per-sample metrics of a model on a dataset, computed once per process.
  const std::vector<evaluation::SampleMetrics>& evaluate(const model::ParameterVector& theta,
                                                         const model::HeadMatrix& h, const data::Dataset& d) {
    const auto key = std::make_pair(theta.fingerprint(), Fnv1a().u64(d.fingerprint()).u64(h.fingerprint()).digest());
    if (auto it = evaluations_.find(key); it != evaluations_.end()) return it->second;
    auto per_sample = evaluation::evaluate_samples(cfg_.model, theta, h, d, cfg_.eval, opt_.workers);
    return evaluations_.emplace(key, std::move(per_sample)).first->second;
  }

  // Wraps a stage so failures name it; timing goes to the manifest.
  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
    try {
      return fn();
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("stage ")) throw;
      throw Error("stage " + name + ": " + e.what(), e.code());
    } catch (const std::exception& e) {
      throw Error("stage " + name + ": " + e.what(), ExitCode::kGeneric);
    }
  }

  static std::uint64_t spec_hash(const data::DomainSpec& d) {
    Fnv1a h;
    h.str(d.name).str(d.family).u64(d.glyph_count).str(d.background).f64(d.noise).u64(d.seed);
    for (const auto& c : d.class_names) h.str(c);
    for (double c : d.color) h.f64(c);
    return h.digest();
  }

 private:
  template <typename T>
  const T& obtain(std::map<std::string, T>& memo, const std::string& key, const std::string& stage_name,
                  std::uint64_t inputs, const std::string& rel, const std::string& kind,
                  const std::function<T()>& produce, const std::function<void(const fs::path&, const T&)>& save,
                  const std::function<T(const fs::path&)>& load,
                  const std::function<std::uint64_t(const T&)>& fingerprint) {
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const bool owned = producing_.count(stage_name) > 0;
    const bool may_fill = owned || fill_.count(stage_name) > 0;
    const auto entry = manifest_.artifact(key);
    const bool hit = entry && entry->inputs == inputs && fs::exists(dir() / entry->path);
    if (hit && (!owned || opt_.resume)) {
      T value = load(dir() / entry->path);
      if (fingerprint(value) == entry->fingerprint) return memo.emplace(key, std::move(value)).first->second;
      if (!may_fill) throw FormatError("artifact '" + key + "' does not match its manifest fingerprint");
      log("artifact '" + key + "' failed verification; recomputing");
    }
    if (!may_fill) {
      if (entry && entry->inputs != inputs) {
        throw MissingArtifactError("artifact '" + key + "' is stale for this config; rerun `xferlab " + stage_name +
                                   "` (or `xferlab pipeline`)");
      }
      throw MissingArtifactError("artifact '" + key + "' not found in " + dir().string() + "; run `xferlab " +
                                 stage_name + "` (or `xferlab pipeline`) first");
    }
    const auto t0 = std::chrono::steady_clock::now();
    log(stage_name + ": " + key);
    T value = stage(stage_name, produce);
    save(dir() / rel, value);
    manifest_.record(key, {rel, fingerprint(value), inputs, kind});
    manifest_.add_timing(stage_name,
                         std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return memo.emplace(key, std::move(value)).first->second;
  }

  const data::Dataset& obtain_dataset(const std::string& key, const std::string& stage_name, std::uint64_t inputs,
                                      const std::string& rel, const std::function<data::Dataset()>& produce) {
    return obtain<data::Dataset>(
        datasets_, key, stage_name, inputs, rel, "dataset", produce,
        [](const fs::path& p, const data::Dataset& d) { data::save_dataset(p, d); },
        [](const fs::path& p) { return data::load_dataset(p); },
        [](const data::Dataset& d) { return d.fingerprint(); });
  }

  const training::TrainedArtifact& obtain_model(const std::string& key, const std::string& stage_name,
                                                std::uint64_t inputs, const std::string& rel,
                                                const std::function<training::TrainedArtifact()>& produce) {
    return obtain<training::TrainedArtifact>(
        models_, key, stage_name, inputs, rel, "checkpoint", produce,
        [](const fs::path& p, const training::TrainedArtifact& a) { training::save_artifact(p, a); },
        [](const fs::path& p) { return training::load_artifact(p); },
        [](const training::TrainedArtifact& a) { return a.fingerprint(); });
  }

  ExperimentConfig cfg_;
  RunOptions opt_;
  std::set<std::string> producing_;
  std::set<std::string> fill_;
  RunManifest manifest_;
  std::map<std::string, data::Dataset> datasets_;
  std::map<std::string, training::TrainedArtifact> models_;
  std::map<std::string, model::ParameterVector> vectors_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<evaluation::SampleMetrics>> evaluations_;
};

}  // namespace xferlab::cli
