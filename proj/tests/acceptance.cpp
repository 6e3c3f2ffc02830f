// Acceptance checks. Usage: xferlab_acceptance <criterion 1-10 | all>.
// Prints one PASS/FAIL line per criterion; exit status is nonzero if any
// requested criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "xferlab/arithmetic/task_vector.hpp"
#include "xferlab/cli/commands.hpp"
#include "xferlab/data/idx.hpp"
#include "xferlab/evaluation/metrics.hpp"
#include "xferlab/evaluation/stats.hpp"
#include "xferlab/model/checkpoint.hpp"
#include "xferlab/numerics/finite_difference.hpp"
#include "xferlab/numerics/ops.hpp"
#include "xferlab/shapley/exact.hpp"
#include "xferlab/shapley/kernel.hpp"
#include "xferlab/training/loss.hpp"

namespace fs = std::filesystem;
using namespace xferlab;
using namespace xferlab::fixtures;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path config_path(const std::string& name) { return fs::path(XFERLAB_SOURCE_DIR) / "configs" / name; }

cli::ExperimentConfig load_config(const std::string& name, const fs::path& out) {
  auto cfg = cli::load_experiment_config(config_path(name));
  cfg.out = out;
  return cfg;
}

cli::RunOptions quiet_options() {
  cli::RunOptions o;
  o.quiet = true;
  o.workers = resolve_workers(0);
  return o;
}

// 1. Analytic gradients of L_alpha against central differences.
Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  model::ModelConfig cfg;  // default tiny model
  cfg.seed = 21;
  const auto geo = geometry_of(cfg);
  auto spec = strokes_domain("grad", 9);
  auto d = with_random_phi(data::gen_split(spec, geo, "train", 16), 77);
  const auto head = head_for(d, cfg);
  auto theta = model::init_parameter_vector(cfg);
  // Move away from the initialization so no coordinate sits at a symmetric
  // point of the loss.
  {
    auto noise = random_values(theta.size(), 5, 0.02);
    auto& w = theta.mutable_values();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += noise[i];
  }
  std::vector<training::BatchItem> batch;
  for (const auto& s : d.samples) batch.push_back({s.pixels, s.label, &*s.phi});
  const double alpha = 0.5;

  model::ModelGraph mg(cfg, theta, head, /*trainable=*/true);
  auto bl = training::batch_loss(mg, batch, alpha);
  mg.graph().backward(bl.total);
  const auto grad = mg.flat_gradient();

  auto loss = [&](const std::vector<double>& values) {
    model::ParameterVector p(theta.shared_layout(), values);
    model::ModelGraph g(cfg, p, head, /*trainable=*/false);
    auto r = training::batch_loss(g, batch, alpha);
    return g.graph().value(r.total).item();
  };
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> pick(0, theta.size() - 1);
  std::vector<std::size_t> coords(64);
  for (auto& c : coords) c = pick(rng);
  const auto fd = numerics::finite_difference_gradient(loss, theta.values(), coords, 1e-5);
  double worst = 0.0;
  std::size_t worst_at = 0;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double e = numerics::gradient_relative_error(grad[coords[i]], fd[i]);
    if (e > worst) {
      worst = e;
      worst_at = coords[i];
    }
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-5 && secs < 60.0,
          "max relative error " + num(worst) + " at coordinate " + std::to_string(worst_at) + " (M=" +
              std::to_string(cfg.num_patches()) + ", K=" + std::to_string(cfg.embed_dim) + ", " +
              std::to_string(cfg.num_layers) + " layers, 64 coordinates); " + num(secs) + " s"};
}

// 2. Kernel SHAP with full enumeration equals exact Shapley; efficiency.
Outcome shapley_oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = tiny_model(12, 4, 16, 2);  // M = 9
  auto d = data::gen_split(strokes_domain("shap", 4), geometry_of(cfg), "test", 10);
  const auto head = head_for(d, cfg);
  auto theta = model::init_parameter_vector(cfg);
  model::InferenceEngine engine(cfg, theta, head);
  const auto mean = d.mean_image();
  const auto M = cfg.num_patches();
  double max_diff = 0.0, max_eff = 0.0;
  bool all_enumerated = true;
  for (const auto& s : d.samples) {
    auto baseline = shapley::make_baseline("mean", cfg, s.pixels, mean);
    shapley::ModelGame game(engine, s.pixels, baseline, s.label);
    auto exact = shapley::exact_shapley(M, game);
    auto kernel = shapley::kernel_shap(M, game, {(std::size_t(1) << M) - 2, 3});
    all_enumerated = all_enumerated && kernel.enumerated;
    for (std::size_t m = 0; m < M; ++m) max_diff = std::max(max_diff, std::abs(exact[m] - kernel.phi[m]));
    double total = 0.0;
    for (double v : exact) total += v;
    max_eff = std::max(max_eff, std::abs(total - (game(shapley::all_bits(M)) - game(0))));
  }
  const double secs = seconds_since(t0);
  return {all_enumerated && max_diff < 1e-6 && max_eff < 1e-8 && secs < 120.0,
          "max |kernel - exact| " + num(max_diff) + ", max efficiency gap " + num(max_eff) + " over " +
              std::to_string(d.size()) + " images, M=" + std::to_string(M) + "; " + num(secs) + " s"};
}

// 3. Axiomatic checks on a linear probe.
Outcome axiomatic_attribution() {
  double max_analytic = 0.0, max_dummy = 0.0, max_infidelity = 0.0;
  const std::size_t M = 9, dummy = 4;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    LinearProbeGame game{random_values(M, seed), random_values(M, seed + 100), random_values(M, seed + 200), 0.3};
    game.weights[dummy] = 0.0;
    const auto analytic = game.analytic();
    const auto phi = shapley::exact_shapley(M, game);
    for (std::size_t m = 0; m < M; ++m) max_analytic = std::max(max_analytic, std::abs(phi[m] - analytic[m]));
    max_dummy = std::max(max_dummy, std::abs(phi[dummy]));
    evaluation::InfidelityConfig ic;
    max_infidelity = std::max(max_infidelity, evaluation::infidelity(game, analytic, ic, seed));
  }
  return {max_analytic < 1e-10 && max_dummy < 1e-8 && max_infidelity < 1e-10,
          "max |exact - analytic| " + num(max_analytic) + ", dummy |phi| " + num(max_dummy) + ", infidelity " +
              num(max_infidelity) + " over 5 seeds"};
}

bool bit_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

std::uint64_t ulp_distance(double a, double b) {
  auto key = [](double x) {
    auto u = std::bit_cast<std::int64_t>(x);
    return u < 0 ? std::numeric_limits<std::int64_t>::min() - u : u;
  };
  const auto ka = key(a), kb = key(b);
  return ka > kb ? static_cast<std::uint64_t>(ka - kb) : static_cast<std::uint64_t>(kb - ka);
}

// 4. Arithmetic identities on trained artifacts.
Outcome arithmetic_identities() {
  auto cfg = tiny_model();
  const auto geo = geometry_of(cfg);
  auto source = strokes_domain("src", 31);
  auto target = strokes_domain("tgt", 32, {"antidiag", "plus", "cross"});
  auto mixture = data::gen_mixture({source, target}, geo, 16, {0.85, 0.85, 0.85}, 4);
  training::TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 2;
  auto base = training::pretrain(cfg, mixture, head_for(mixture, cfg), tc);
  auto tr = data::gen_split(target, geo, "train", 16);
  auto te = data::gen_split(target, geo, "test", 8);
  const auto head = head_for(tr, cfg);
  auto ft = training::finetune(cfg, base, tr, head, tc, "tgt/ft");
  shapley::ShapConfig sc;
  sc.kind = shapley::ExplainerKind::kExact;
  auto trx = data::attach_explanations(tr, cfg, ft.theta, head, sc, 0, 1);
  auto tex = data::attach_explanations(te, cfg, ft.theta, head, sc, 0, 1);
  auto star_cfg = tc;
  star_cfg.alpha = 0.5;
  auto star = training::finetune(cfg, base, trx, head, star_cfg, "tgt/ft*");

  auto tau_ft = arithmetic::task_vector(ft, base);
  auto tau_star = arithmetic::explainability_vector(star, ft);
  const bool round_trip = bit_equal(arithmetic::apply(base.theta, {{1.0, &tau_ft}}).values(), ft.theta.values());
  const bool self_transfer =
      bit_equal(arithmetic::transfer(base.theta, tau_ft, tau_star, {1.0, 1.0}).values(), star.theta.values());
  auto neutral = arithmetic::transfer(base.theta, tau_ft, tau_star, {1.0, 0.0});
  const bool neutral_bits = bit_equal(neutral.values(), ft.theta.values());
  evaluation::EvalConfig ec;
  const auto m_neutral = evaluation::evaluate_model(cfg, neutral, head, tex, ec);
  const auto m_ft = evaluation::evaluate_model(cfg, ft.theta, head, tex, ec);
  const bool neutral_metrics = m_neutral == m_ft;

  // tau_D = tau_C - tau_A + tau_B from three task vectors of one base.
  auto src_tr = data::gen_split(source, geo, "train", 16);
  const auto src_head = head_for(src_tr, cfg);
  auto src_ft = training::finetune(cfg, base, src_tr, src_head, tc, "src/ft");
  auto tc2 = tc;
  tc2.seed = 99;
  auto ft2 = training::finetune(cfg, base, tr, head, tc2, "tgt/ft2");
  auto tau_a = arithmetic::task_vector(src_ft, base);
  auto tau_c = tau_ft;
  auto tau_b = arithmetic::task_vector(ft2, base);
  auto via_analogy = arithmetic::apply(base.theta, {{1.0, arithmetic::analogy(tau_c, tau_a, tau_b)}});
  auto diff = arithmetic::TaskVector::combine({{1.0, &tau_b}, {-1.0, &tau_a}}, {"a", "b", "b-a"});
  auto two_term = arithmetic::apply(base.theta, {{1.0, &tau_c}, {1.0, &diff}});
  std::uint64_t max_ulp = 0;
  for (std::size_t i = 0; i < via_analogy.size(); ++i)
    max_ulp = std::max(max_ulp, ulp_distance(via_analogy.values()[i], two_term.values()[i]));

  const bool pass = round_trip && self_transfer && neutral_bits && neutral_metrics && max_ulp <= 1;
  return {pass, std::string("round trip ") + (round_trip ? "bit-exact" : "DIFFERS") + ", self-transfer " +
                    (self_transfer ? "bit-exact" : "DIFFERS") + ", lambda2=0 parameters " +
                    (neutral_bits ? "bit-exact" : "DIFFER") + " and metrics " +
                    (neutral_metrics ? "identical" : "DIFFER") + ", analogy max " + std::to_string(max_ulp) + " ulp"};
}

// 5. Desk-scale transfer success on the related pair.
Outcome transfer_success() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = scratch_dir("accept_related");
  const auto cfg = load_config("related_pair.ini", dir);
  std::ostringstream sink;
  const auto pe = cli::cmd_pipeline(cfg, quiet_options(), sink);
  const double secs = seconds_since(t0);
  std::size_t hits = 0;
  const cli::GridPoint* best = nullptr;
  for (const auto& g : pe.transfer) {
    const bool ok = g.normalized.e_rmse <= 0.9 && g.normalized.accuracy >= 0.9 &&
                    g.report.iou_at_10 > pe.reference.iou_at_10;
    if (!ok) continue;
    ++hits;
    if (!best || g.normalized.e_rmse < best->normalized.e_rmse) best = &g;
  }
  std::string detail = std::to_string(hits) + " of " + std::to_string(pe.transfer.size()) + " grid points qualify";
  if (best) {
    detail += "; best (alpha " + num(best->alpha) + ", lambda2 " + num(best->lambda2) + "): n_e_rmse " +
              num(best->normalized.e_rmse) + ", n_accuracy " + num(best->normalized.accuracy) + ", IoU@10 " +
              num(best->report.iou_at_10) + " vs " + num(pe.reference.iou_at_10);
  }
  detail += "; " + num(secs) + " s";
  return {hits > 0 && secs < 900.0, detail};
}

cli::PairStudyResult run_pair_study(const std::string& tag) {
  const auto dir = scratch_dir("accept_pairs_" + tag);
  const auto cfg = load_config("pair_study.ini", dir);
  std::ostringstream sink;
  return cli::cmd_pair_study(cfg, quiet_options(), sink);
}

// 6. Related pairs beat unrelated pairs at the selected grid point.
Outcome relatedness_contrast() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_pair_study("contrast");
  const double secs = seconds_since(t0);
  std::size_t failed = 0;
  for (const auto& row : r.rows) failed += row.ok ? 0 : 1;
  return {r.related_mean < r.unrelated_mean && failed == 0 && secs < 5400.0,
          "mean normalized E-RMSE related " + num(r.related_mean) + " vs unrelated " + num(r.unrelated_mean) + "; " +
              std::to_string(failed) + " failed pairs; " + num(secs) + " s"};
}

// 7. Correlation signs of the similarity study.
Outcome similarity_signs() {
  const auto r = run_pair_study("similarity");
  if (!r.similarity) return {false, "similarity study missing (oracle runs disabled?)"};
  const auto& s = *r.similarity;
  if (!s.ft_vs_star || !s.star_vs_e_rmse) return {false, "correlation undefined"};
  const bool pass = s.used >= 12 && s.ft_vs_star->r > 0.0 && s.star_vs_e_rmse->r < 0.0;
  return {pass, "pearson(cos_ft, cos_star) r=" + num(s.ft_vs_star->r) + " p=" + num(s.ft_vs_star->p) +
                    "; pearson(cos_star, e_rmse) r=" + num(s.star_vs_e_rmse->r) + " p=" + num(s.star_vs_e_rmse->p) +
                    "; " + std::to_string(s.used) + " rows (published 0.90 and -0.47)"};
}

// 8. Kernel SHAP budget curve against the transferred model.
Outcome budget_curve() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dir = scratch_dir("accept_budget");
  const auto cfg = load_config("budget_curve.ini", dir);
  std::ostringstream sink;
  cli::cmd_pipeline(cfg, quiet_options(), sink);
  const auto bc = cli::cmd_compare_shap(cfg, quiet_options(), sink);
  const double secs = seconds_since(t0);
  std::string curve;
  for (const auto& p : bc.curve) curve += " P=" + std::to_string(p.budget) + ":" + num(p.score.mean);
  const double at_10 = bc.curve.empty() ? 1.0 : bc.curve.front().score.mean;
  const bool budgets_ok = !bc.curve.empty() && bc.curve.front().budget == 10;
  return {budgets_ok && bc.images == 20 && bc.inversions <= 1 && bc.model_iou > at_10,
          "model IoU@10 " + num(bc.model_iou) + "; kernel SHAP" + curve + "; inversions " +
              std::to_string(bc.inversions) + "; crossover " +
              (bc.crossover ? std::to_string(*bc.crossover) : std::string("none")) + " (published 150); " +
              std::to_string(bc.images) + " images; " + num(secs) + " s"};
}

// 9. Tagged metric and primitive examples.
Outcome metric_examples() {
  std::vector<std::string> failures;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };

  {
    std::vector<double> a(16), b(16);
    for (std::size_t i = 0; i < 16; ++i) a[i] = b[i] = static_cast<double>(i);
    check(evaluation::iou_at_k(a, b, 10) == 1.0, "iou identical");
    std::vector<double> p(20, 0.0), q(20, 0.0);
    for (std::size_t i = 0; i < 10; ++i) p[i] = 1.0 + static_cast<double>(i);
    for (std::size_t i = 10; i < 20; ++i) q[i] = 1.0 + static_cast<double>(i);
    check(evaluation::iou_at_k(p, q, 10) == 0.0, "iou disjoint");
    std::vector<double> r(20, 0.0);
    for (std::size_t i = 5; i < 15; ++i) r[i] = 1.0 + static_cast<double>(i);
    check(evaluation::iou_at_k(p, r, 10) == 5.0 / 15.0, "iou overlap 5");
  }
  {
    model::SelfExplainingOutput out;
    out.num_patches = 4;
    out.num_classes = 1;
    out.logits = {0.0};
    out.attributions = {3.0, 4.0, 0.0, 0.0};
    const std::vector<double> phi(4, 0.0);
    std::vector<model::SelfExplainingOutput> outs{out};
    std::vector<std::size_t> labels{0};
    std::vector<std::optional<std::vector<double>>> phis{phi};
    check(std::sqrt(training::explanation_loss(outs, labels, phis)) == 5.0, "e_rmse pythagorean");
  }
  {
    const std::vector<double> xs{1, 2, 3, 4, 5}, ys{2, 1, 4, 3, 5};
    const auto c = evaluation::pearson(xs, ys);
    check(near(c.r, 0.8, 1e-12), "pearson r = 0.8");
    check(near(c.p, 0.10408803866182799, 1e-9), "pearson p = 0.104");
    std::vector<double> affine, neg;
    for (double x : xs) {
      affine.push_back(2.0 * x + 1.0);
      neg.push_back(-x);
    }
    check(evaluation::pearson(xs, affine).r == 1.0, "pearson affine");
    check(evaluation::pearson(xs, neg).r == -1.0, "pearson negated");
  }
  {
    const auto s = numerics::softmax_values(std::vector<double>{1, 2, 3});
    check(near(s[0], 0.09003057, 5e-9) && near(s[1], 0.24472847, 5e-9) && near(s[2], 0.66524096, 5e-9),
          "softmax [1,2,3]");
    const auto z = numerics::softmax_values(std::vector<double>{0, 0});
    check(z[0] == 0.5 && z[1] == 0.5, "softmax [0,0]");
    const auto big = numerics::softmax_values(std::vector<double>{1000, 1000});
    check(big[0] == 0.5 && big[1] == 0.5, "softmax [1000,1000]");
  }
  {
    check(numerics::gelu_value(0.0) == 0.0, "gelu(0)");
    check(near(numerics::gelu_value(1.0), 0.8411919906, 5e-11), "gelu(1)");
    check(near(numerics::gelu_value(10.0), 10.0, 1e-6), "gelu(10)");
  }
  {
    check(near(numerics::cross_entropy_value(std::vector<double>{0, 0, 0, 0}, 0), std::log(4.0), 1e-12), "ce uniform");
    const double ce = numerics::cross_entropy_value(std::vector<double>{10, -10}, 0);
    check(near(ce, 2.061153620314381e-09, 1e-18), "ce [10,-10]");
  }
  check(shapley::kernel_weight(4, 1) == 0.25, "pi(1), M=4");
  return {failures.empty(), failures.empty() ? "all tagged examples hold" : "failed: " + [&] {
    std::string s;
    for (const auto& f : failures) s += (s.empty() ? "" : ", ") + f;
    return s;
  }()};
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

// The manifest without its [timing] section.
std::string manifest_without_timing(const std::string& text) {
  auto st = StructuredText::parse(text, "manifest");
  StructuredText out;
  for (const auto& sec : st.sections()) {
    if (sec.name == "timing") continue;
    for (const auto& [k, v] : sec.entries) out.set(sec.name, k, v);
  }
  return out.serialize();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + XFERLAB_CLI_PATH + "\" " + args + " --quiet > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// 10. Byte-identical reruns and format rejection.
Outcome determinism_and_formats() {
  const auto root = scratch_dir("accept_determinism");
  const auto cfg = config_path("smoke.ini").string();
  std::vector<std::string> problems;
  for (const char* run : {"a", "b"}) {
    const int rc = run_cli("pipeline --config \"" + cfg + "\" --oracle --out \"" + (root / run).string() + "\"");
    if (rc != 0) problems.push_back(std::string("pipeline run ") + run + " exited " + std::to_string(rc));
  }
  std::size_t compared = 0, checkpoints = 0, datasets = 0, tables = 0;
  if (problems.empty()) {
    const auto a = read_tree(root / "a"), b = read_tree(root / "b");
    if (a.size() != b.size()) problems.push_back("runs produced different file sets");
    for (const auto& [name, bytes] : a) {
      auto it = b.find(name);
      if (it == b.end()) {
        problems.push_back(name + " missing in second run");
        continue;
      }
      const bool same = name == cli::kManifestName
                            ? manifest_without_timing(bytes) == manifest_without_timing(it->second)
                            : bytes == it->second;
      if (!same) problems.push_back(name + " differs");
      ++compared;
      const auto ext = fs::path(name).extension();
      checkpoints += ext == ".sevx";
      datasets += ext == ".sevd";
      tables += ext == ".csv" || ext == ".tsv";
    }
    if (checkpoints == 0 || datasets == 0 || tables == 0) problems.push_back("run is missing an artifact kind");

    // A resumed rerun trains nothing and leaves every artifact untouched.
    const int rc = run_cli("pipeline --config \"" + cfg + "\" --oracle --resume --out \"" + (root / "a").string() + "\"");
    const auto again = read_tree(root / "a");
    for (const auto& [name, bytes] : a) {
      if (name == cli::kManifestName) continue;
      auto it = again.find(name);
      if (it == again.end() || it->second != bytes) problems.push_back("resume changed " + name);
    }
    if (rc != 0) problems.push_back("resumed pipeline exited " + std::to_string(rc));

    // Flipped checkpoint byte.
    const auto ck = root / "a" / "models" / "base.sevx";
    auto bytes = read_file(ck);
    bytes[bytes.size() / 2] = static_cast<char>(bytes[bytes.size() / 2] ^ 0x10);
    const auto bad = root / "flipped.sevx";
    write_file(bad, bytes);
    bool rejected = false;
    try {
      model::load_checkpoint(bad);
    } catch (const FormatError&) {
      rejected = true;
    }
    if (!rejected) problems.push_back("flipped checkpoint byte was accepted");
  }

  // IDX with a bad magic number.
  std::string images = {0, 0, 8, 4, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 1, 2, 3, 4};
  std::string labels = {0, 0, 8, 1, 0, 0, 0, 1, 0};
  bool idx_ok = false, idx_rejected = false;
  try {
    idx_ok = data::parse_idx(images.substr(0, 2) + std::string{8, 3} + images.substr(4), labels, {2, 1, 1},
                             "idx").size() == 1;
  } catch (const std::exception&) {
  }
  try {
    data::parse_idx(images, labels, {2, 1, 1}, "idx");
  } catch (const FormatError&) {
    idx_rejected = true;
  }
  if (!idx_ok) problems.push_back("valid IDX file was rejected");
  if (!idx_rejected) problems.push_back("IDX bad magic was accepted");

  std::string detail = std::to_string(compared) + " files compared (" + std::to_string(checkpoints) +
                       " checkpoints, " + std::to_string(datasets) + " datasets, " + std::to_string(tables) +
                       " tables); resume reuse, flipped byte and IDX magic checked";
  if (!problems.empty()) {
    detail = "";
    for (const auto& p : problems) detail += (detail.empty() ? "" : "; ") + p;
  }
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradient_correctness},
      {"Shapley oracle equivalence", shapley_oracle_equivalence},
      {"axiomatic attribution checks", axiomatic_attribution},
      {"arithmetic identities", arithmetic_identities},
      {"desk-scale transfer success", transfer_success},
      {"relatedness contrast", relatedness_contrast},
      {"similarity correlation signs", similarity_signs},
      {"budget-curve behavior", budget_curve},
      {"metric unit examples", metric_examples},
      {"determinism and formats", determinism_and_formats},
  };
  const std::string which = argc > 1 ? argv[1] : "all";
  bool all_pass = true, any = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (which != "all" && which != std::to_string(i + 1)) continue;
    any = true;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    all_pass = all_pass && o.pass;
    std::cout << "criterion " << (i + 1) << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL") << " - "
              << o.detail << std::endl;
  }
  if (!any) {
    std::cerr << "usage: xferlab_acceptance <1-10|all>\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
