// xferlab: explainability-transfer experiments from a config file.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "xferlab/cli/commands.hpp"
#include "xferlab/util/parallel.hpp"

namespace {

using namespace xferlab;
using Command = std::function<void(const cli::ExperimentConfig&, const cli::RunOptions&)>;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  bool oracle = false;
  bool resume = false;
  bool quiet = false;
};

cli::ExperimentConfig resolve_config(const Flags& f) {
  auto cfg = cli::load_experiment_config(f.config);
  if (f.seed) {
    cfg.seed = *f.seed;
    cfg.derive_seeds();
  }
  if (!f.out.empty()) cfg.out = f.out;
  if (f.oracle) cfg.oracle = true;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainability transfer via task arithmetic on a self-explaining ViT", "xferlab"};
  app.set_version_flag("--version", cli::kToolVersion);
  app.require_subcommand(1);

  Flags flags;
  const std::map<std::string, std::pair<std::string, Command>> commands = {
      {"gen-data", {"generate the pretraining mixture and every domain's splits", cli::cmd_gen_data}},
      {"pretrain", {"pretrain the base model on the mixture", cli::cmd_pretrain}},
      {"explain", {"attach Shapley supervision (trains missing reference models)", cli::cmd_explain}},
      {"finetune", {"finetune classification-only and explanation-supervised models", cli::cmd_finetune}},
      {"transfer", {"build transferred models over the (alpha, lambda2) grid", cli::cmd_transfer}},
      {"eval", {"evaluate every model on the explained target test split", [](auto& c, auto& o) { cli::cmd_eval(c, o); }}},
      {"sweep", {"metric curves with 95% intervals over the grid", [](auto& c, auto& o) { cli::cmd_sweep(c, o); }}},
      {"pair-study",
       {"all ordered pairs of the study domains plus similarity correlations",
        [](auto& c, auto& o) { cli::cmd_pair_study(c, o); }}},
      {"compare-shap",
       {"Kernel SHAP budget curve against the transferred model",
        [](auto& c, auto& o) { cli::cmd_compare_shap(c, o); }}},
      {"pipeline", {"run every stage for the configured pair", [](auto& c, auto& o) { cli::cmd_pipeline(c, o); }}},
  };

  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", flags.config, "experiment config file")->required();
    sub->add_option("--out", flags.out, "run directory (overrides [experiment] out)");
    sub->add_option("--seed", flags.seed, "master seed (overrides [experiment] seed)");
    sub->add_option("--workers", flags.workers, "worker threads (default: XFERLAB_WORKERS or 1)");
    sub->add_flag("--oracle", flags.oracle, "also train target-supervised models");
    sub->add_flag("--resume", flags.resume, "reuse this command's own verified artifacts");
    sub->add_flag("--quiet", flags.quiet, "suppress progress messages");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    const auto cfg = resolve_config(flags);
    cli::RunOptions opt;
    opt.resume = flags.resume;
    opt.quiet = flags.quiet;
    opt.workers = resolve_workers(static_cast<long>(flags.workers));
    for (auto* sub : app.get_subcommands()) commands.at(sub->get_name()).second(cfg, opt);
    return 0;
  } catch (const Error& e) {
    std::cerr << "xferlab: error: " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "xferlab: error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kGeneric);
  }
}
