#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "xferlab/arithmetic/task_vector.hpp"
#include "xferlab/cli/config.hpp"
#include "xferlab/cli/workspace.hpp"
#include "xferlab/evaluation/metrics.hpp"
#include "xferlab/evaluation/similarity.hpp"
#include "xferlab/evaluation/stats.hpp"
#include "xferlab/evaluation/table.hpp"
#include "xferlab/shapley/budget.hpp"

namespace xferlab::cli {

inline constexpr const char* kSelectionCriterion =
    "minimize normalized E-RMSE subject to normalized accuracy >= min_accuracy; ties go to the earlier grid point";
inline constexpr double kPublishedCrossover = 150.0;

inline double nan_ratio(double value, double reference) {
  return reference == 0.0 ? std::numeric_limits<double>::quiet_NaN() : value / reference;
}

inline std::string pair_key(const std::string& source, const std::string& target) { return source + "_to_" + target; }

inline fs::path pair_dir(const Workspace& ws, const std::string& source, const std::string& target) {
  return ws.dir() / "results" / pair_key(source, target);
}

// Two domains are related when they draw glyphs from the same family.
inline bool related(const data::DomainSpec& a, const data::DomainSpec& b) { return a.family == b.family; }

struct GridPoint {
  double alpha = 0.0;
  double lambda2 = 0.0;
  evaluation::MetricsReport report;
  evaluation::NormalizedReport normalized;
  const std::vector<evaluation::SampleMetrics>* samples = nullptr;
};

struct Selection {
  double alpha = 0.0;
  double lambda2 = 0.0;
  double e_rmse = 0.0;    // normalized
  double accuracy = 0.0;  // normalized
  double iou_at_10 = 0.0;
  bool feasible = false;
};

struct PairEvaluation {
  std::string source, target;
  evaluation::MetricsReport reference;
  const std::vector<evaluation::SampleMetrics>* reference_samples = nullptr;
  std::vector<GridPoint> transfer;  // alpha-major, lambda2-minor
  std::vector<GridPoint> oracle;    // one per alpha; lambda2 unused
  Selection selection;

  const GridPoint& at(double alpha, double lambda2) const {
    for (const auto& g : transfer)
      if (g.alpha == alpha && g.lambda2 == lambda2) return g;
    throw ContractError("grid point (" + format_double(alpha) + ", " + format_double(lambda2) + ") was not evaluated");
  }
};

inline evaluation::NormalizedReport normalize(const evaluation::MetricsReport& r, const evaluation::MetricsReport& ref) {
  return {nan_ratio(r.accuracy, ref.accuracy),   nan_ratio(r.e_rmse, ref.e_rmse),
          nan_ratio(r.iou_at_1, ref.iou_at_1),   nan_ratio(r.iou_at_10, ref.iou_at_10),
          nan_ratio(r.infidelity, ref.infidelity), r.dataset};
}

// Lowest normalized E-RMSE among points keeping min_accuracy; when none
// does, the most accurate point.
inline Selection select_point(const std::vector<GridPoint>& grid, double min_accuracy) {
  if (grid.empty()) throw ContractError("cannot select from an empty grid");
  const GridPoint* best = nullptr;
  for (const auto& g : grid) {
    if (!(g.normalized.accuracy >= min_accuracy) || std::isnan(g.normalized.e_rmse)) continue;
    if (best == nullptr || g.normalized.e_rmse < best->normalized.e_rmse) best = &g;
  }
  const bool feasible = best != nullptr;
  if (!feasible) {
    for (const auto& g : grid)
      if (best == nullptr || g.normalized.accuracy > best->normalized.accuracy) best = &g;
  }
  return {best->alpha, best->lambda2, best->normalized.e_rmse, best->normalized.accuracy, best->report.iou_at_10,
          feasible};
}

inline GridPoint grid_point(Workspace& ws, double alpha, double lambda2, const model::ParameterVector& theta,
                            const model::HeadMatrix& head, const data::Dataset& test,
                            const evaluation::MetricsReport& reference) {
  GridPoint g;
  g.alpha = alpha;
  g.lambda2 = lambda2;
  g.samples = &ws.evaluate(theta, head, test);
  g.report = evaluation::summarize(*g.samples, theta.fingerprint(), test.name);
  g.normalized = normalize(g.report, reference);
  return g;
}

// Evaluates the reference, every transferred model of the grid and, with
// oracle runs on, the target-supervised models on the explained target test
// split.
inline PairEvaluation evaluate_pair(Workspace& ws, const std::string& source, const std::string& target) {
  const auto& cfg = ws.config();
  PairEvaluation pe;
  pe.source = source;
  pe.target = target;
  const auto& test = ws.explained(target, "test");
  const auto head = ws.head(target);
  const auto& ref = ws.ft(target);
  pe.reference_samples = &ws.evaluate(ref.theta, head, test);
  pe.reference = evaluation::summarize(*pe.reference_samples, ref.fingerprint(), test.name);
  for (double a : cfg.alpha_grid) {
    for (double l : cfg.lambda2_grid) {
      const auto& theta = ws.transferred(source, target, a, l);
      pe.transfer.push_back(grid_point(ws, a, l, theta, head, test, pe.reference));
    }
  }
  if (cfg.oracle) {
    for (double a : cfg.alpha_grid) {
      const auto& star = ws.ft_star(target, a);
      pe.oracle.push_back(grid_point(ws, a, std::numeric_limits<double>::quiet_NaN(), star.theta, head, test,
                                     pe.reference));
    }
  }
  pe.selection = select_point(pe.transfer, cfg.min_accuracy);
  return pe;
}

inline const std::vector<std::string>& metrics_header() {
  static const std::vector<std::string> h = {
      "model",         "alpha",         "lambda2",     "accuracy",        "e_rmse",      "iou_at_1",
      "iou_at_10",     "infidelity",    "n_accuracy",  "n_e_rmse",        "n_iou_at_1",  "n_iou_at_10",
      "n_infidelity",  "samples",       "explained",   "fingerprint"};
  return h;
}

inline evaluation::Table metrics_table(const PairEvaluation& pe) {
  evaluation::Table t{metrics_header(), {}};
  auto add = [&](const std::string& kind, double a, double l, const evaluation::MetricsReport& r) {
    const auto n = normalize(r, pe.reference);
    t.add({kind, format_double(a), format_double(l), format_double(r.accuracy), format_double(r.e_rmse),
           format_double(r.iou_at_1), format_double(r.iou_at_10), format_double(r.infidelity),
           format_double(n.accuracy), format_double(n.e_rmse), format_double(n.iou_at_1), format_double(n.iou_at_10),
           format_double(n.infidelity), std::to_string(r.samples), std::to_string(r.explained),
           hex64(r.model_fingerprint)});
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  add("reference", 1.0, nan, pe.reference);
  for (const auto& g : pe.transfer) add("transfer", g.alpha, g.lambda2, g.report);
  for (const auto& g : pe.oracle) add("oracle", g.alpha, nan, g.report);
  return t;
}

inline const std::vector<std::string>& sweep_header() {
  static const std::vector<std::string> h = {
      "alpha",      "lambda2",        "n_e_rmse",       "n_e_rmse_lo", "n_e_rmse_hi", "iou_at_10",
      "iou_at_10_lo", "iou_at_10_hi", "n_accuracy",     "n_accuracy_lo", "n_accuracy_hi"};
  return h;
}

// Per grid point: normalized E-RMSE (interval from the residual mean's
// interval through the square root), IoU@10 and normalized accuracy, each
// with a 95% interval over test samples.
inline evaluation::Table sweep_table(const PairEvaluation& pe) {
  evaluation::Table t{sweep_header(), {}};
  for (const auto& g : pe.transfer) {
    std::vector<double> residuals, ious, correct;
    for (const auto& s : *g.samples) {
      correct.push_back(s.correct ? 1.0 : 0.0);
      if (!s.residual) continue;
      residuals.push_back(*s.residual);
      ious.push_back(*s.iou_large);
    }
    const auto res = evaluation::mean_interval(residuals);
    const auto iou = evaluation::mean_interval(ious);
    const auto acc = evaluation::mean_interval(correct);
    const double ref_e = pe.reference.e_rmse, ref_a = pe.reference.accuracy;
    auto root = [](double v) { return std::sqrt(std::max(v, 0.0)); };
    t.add({format_double(g.alpha), format_double(g.lambda2), format_double(nan_ratio(root(res.mean), ref_e)),
           format_double(nan_ratio(root(res.lo), ref_e)), format_double(nan_ratio(root(res.hi), ref_e)),
           format_double(iou.mean), format_double(iou.lo), format_double(iou.hi),
           format_double(nan_ratio(acc.mean, ref_a)), format_double(nan_ratio(acc.lo, ref_a)),
           format_double(nan_ratio(acc.hi, ref_a))});
  }
  return t;
}

inline void record_selection(Workspace& ws, const PairEvaluation& pe) {
  const auto sec = "selection." + pair_key(pe.source, pe.target);
  auto& m = ws.manifest();
  const auto& s = pe.selection;
  m.set(sec, "criterion", kSelectionCriterion);
  m.set(sec, "min_accuracy", format_double(ws.config().min_accuracy));
  m.set(sec, "alpha", format_double(s.alpha));
  m.set(sec, "lambda2", format_double(s.lambda2));
  m.set(sec, "n_e_rmse", format_double(s.e_rmse));
  m.set(sec, "n_accuracy", format_double(s.accuracy));
  m.set(sec, "iou_at_10", format_double(s.iou_at_10));
  m.set(sec, "feasible", s.feasible ? "true" : "false");
  m.save();

  StructuredText st;
  st.set("selection", "source", pe.source);
  st.set("selection", "target", pe.target);
  st.set("selection", "criterion", kSelectionCriterion);
  st.set("selection", "alpha", format_double(s.alpha));
  st.set("selection", "lambda2", format_double(s.lambda2));
  st.set("selection", "n_e_rmse", format_double(s.e_rmse));
  st.set("selection", "n_accuracy", format_double(s.accuracy));
  st.set("selection", "iou_at_10", format_double(s.iou_at_10));
  st.set("selection", "reference_iou_at_10", format_double(pe.reference.iou_at_10));
  st.set("selection", "feasible", s.feasible ? "true" : "false");
  write_file(pair_dir(ws, pe.source, pe.target) / "selection.ini", st.serialize());
}

inline void write_pair_results(Workspace& ws, const PairEvaluation& pe, bool metrics, bool sweep) {
  const auto dir = pair_dir(ws, pe.source, pe.target);
  make_directories(dir);
  if (metrics) evaluation::save_table(dir / "metrics.csv", metrics_table(pe));
  if (sweep) evaluation::save_table(dir / "sweep.tsv", sweep_table(pe));
  record_selection(ws, pe);
}

inline void print_selection(const PairEvaluation& pe, std::ostream& out) {
  const auto& s = pe.selection;
  out << pe.source << " -> " << pe.target << ": alpha=" << format_double(s.alpha)
      << " lambda2=" << format_double(s.lambda2) << " n_e_rmse=" << format_double(s.e_rmse)
      << " n_accuracy=" << format_double(s.accuracy) << " iou@10=" << format_double(s.iou_at_10)
      << " (reference " << format_double(pe.reference.iou_at_10) << ")" << (s.feasible ? "" : " [infeasible]")
      << "\n";
}

inline void require_pair(const ExperimentConfig& cfg) {
  if (cfg.source.empty() || cfg.target.empty()) {
    throw ConfigError("[experiment] source and target are required for this command");
  }
}

// ---- commands ----

inline void cmd_gen_data(const ExperimentConfig& cfg, const RunOptions& opt) {
  Workspace ws(cfg, opt, {kStageData});
  const auto& mix = ws.mixture();
  ws.manifest().set("data", "mixture", std::to_string(mix.size()));
  for (const auto& d : cfg.domains) {
    for (const char* which : {"train", "test"}) {
      const auto& split = ws.split(d.name, which);
      ws.manifest().set("data", d.name + "." + which, std::to_string(split.size()));
    }
  }
  ws.manifest().save();
}

inline void cmd_pretrain(const ExperimentConfig& cfg, const RunOptions& opt) {
  Workspace ws(cfg, opt, {kStagePretrain});
  ws.base();
}

// Attaches explanations: source training split, target test split (the
// evaluation ground truth) and, for oracle runs, the target training split.
inline void cmd_explain(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_pair(cfg);
  Workspace ws(cfg, opt, {kStageExplain}, {kStageFinetune});
  ws.explained(cfg.source, "train");
  ws.explained(cfg.target, "test");
  if (cfg.oracle) ws.explained(cfg.target, "train");
}

inline void cmd_finetune(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_pair(cfg);
  Workspace ws(cfg, opt, {kStageFinetune});
  ws.ft(cfg.source);
  ws.ft(cfg.target);
  for (double a : cfg.alpha_grid) ws.ft_star(cfg.source, a);
  if (cfg.oracle)
    for (double a : cfg.alpha_grid) ws.ft_star(cfg.target, a);
}

inline void cmd_transfer(const ExperimentConfig& cfg, const RunOptions& opt) {
  require_pair(cfg);
  Workspace ws(cfg, opt, {kStageTransfer});
  for (double a : cfg.alpha_grid)
    for (double l : cfg.lambda2_grid) ws.transferred(cfg.source, cfg.target, a, l);
}

inline PairEvaluation cmd_eval(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& out = std::cout) {
  require_pair(cfg);
  Workspace ws(cfg, opt, {});
  auto pe = ws.stage("eval", [&] { return evaluate_pair(ws, cfg.source, cfg.target); });
  write_pair_results(ws, pe, true, false);
  print_selection(pe, out);
  return pe;
}

inline PairEvaluation cmd_sweep(const ExperimentConfig& cfg, const RunOptions& opt, std::ostream& out = std::cout) {
  require_pair(cfg);
  Workspace ws(cfg, opt, {});
  auto pe = ws.stage("sweep", [&] { return evaluate_pair(ws, cfg.source, cfg.target); });
  write_pair_results(ws, pe, false, true);
  print_selection(pe, out);
  return pe;
}

inline const std::set<std::string>& all_stages() {
  static const std::set<std::string> s = {kStageData, kStagePretrain, kStageExplain, kStageFinetune, kStageTransfer};
  return s;
}

inline PairEvaluation cmd_pipeline(const ExperimentConfig& cfg, const RunOptions& opt,
                                   std::ostream& out = std::cout) {
  require_pair(cfg);
  Workspace ws(cfg, opt, all_stages());
  ws.base();
  ws.explained(cfg.source, "train");
  ws.ft(cfg.source);
  for (double a : cfg.alpha_grid) ws.ft_star(cfg.source, a);
  ws.ft(cfg.target);
  auto pe = ws.stage("eval", [&] { return evaluate_pair(ws, cfg.source, cfg.target); });
  write_pair_results(ws, pe, true, true);
  print_selection(pe, out);
  return pe;
}

// ---- pair study ----

struct PairStudyRow {
  std::string source, target;
  bool related = false;
  bool ok = false;
  std::string error;
  Selection selection;
  double study_e_rmse = 0.0;    // normalized, at the study point
  double study_accuracy = 0.0;  // normalized, at the study point
};

struct PairStudyResult {
  std::vector<PairStudyRow> rows;
  std::optional<evaluation::SimilarityStudy> similarity;
  double related_mean = std::numeric_limits<double>::quiet_NaN();
  double unrelated_mean = std::numeric_limits<double>::quiet_NaN();
};

inline const std::vector<std::string>& pair_study_header() {
  static const std::vector<std::string> h = {"source",     "target",     "related",    "status",
                                             "alpha",      "lambda2",    "n_e_rmse",   "n_accuracy",
                                             "iou_at_10",  "feasible",   "study_n_e_rmse", "study_n_accuracy"};
  return h;
}

inline PairStudyResult cmd_pair_study(const ExperimentConfig& cfg, const RunOptions& opt,
                                      std::ostream& out = std::cout) {
  if (cfg.study_domains.size() < 3) throw ConfigError("[study] domains needs at least three domains");
  Workspace ws(cfg, opt, all_stages());
  ws.base();
  PairStudyResult result;
  std::vector<evaluation::SimilarityRow> sim;
  const auto& names = cfg.study_domains;
  for (const auto& s : names) {
    for (const auto& t : names) {
      PairStudyRow row;
      row.source = s;
      row.target = t;
      row.related = related(cfg.domain(s), cfg.domain(t));
      try {
        auto pe = evaluate_pair(ws, s, t);
        write_pair_results(ws, pe, true, true);
        row.selection = pe.selection;
        const auto& sp = pe.at(cfg.study_alpha, cfg.study_lambda2);
        row.study_e_rmse = sp.normalized.e_rmse;
        row.study_accuracy = sp.normalized.accuracy;
        if (cfg.oracle) {
          evaluation::SimilarityRow r;
          r.source = s;
          r.target = t;
          r.related = row.related;
          r.cos_star = arithmetic::cosine_similarity(ws.tau_star(s, cfg.study_alpha), ws.tau_star(t, cfg.study_alpha));
          r.cos_ft = arithmetic::cosine_similarity(ws.tau_ft(s), ws.tau_ft(t));
          r.e_rmse = row.study_e_rmse;
          r.accuracy = row.study_accuracy;
          sim.push_back(r);
        }
        row.ok = true;
        if (s != t) print_selection(pe, out);
      } catch (const std::exception& e) {
        row.error = e.what();
        ws.log("pair " + s + " -> " + t + " failed: " + row.error);
      }
      result.rows.push_back(std::move(row));
    }
  }

  evaluation::Table t{pair_study_header(), {}};
  double rel_sum = 0.0, unrel_sum = 0.0;
  std::size_t rel_n = 0, unrel_n = 0;
  for (const auto& r : result.rows) {
    const auto& sel = r.selection;
    t.add({r.source, r.target, r.related ? "1" : "0", r.ok ? "ok" : "failed", format_double(sel.alpha),
           format_double(sel.lambda2), format_double(sel.e_rmse), format_double(sel.accuracy),
           format_double(sel.iou_at_10), sel.feasible ? "1" : "0", format_double(r.study_e_rmse),
           format_double(r.study_accuracy)});
    if (!r.ok || r.source == r.target) continue;
    if (r.related) {
      rel_sum += sel.e_rmse;
      ++rel_n;
    } else {
      unrel_sum += sel.e_rmse;
      ++unrel_n;
    }
  }
  if (rel_n) result.related_mean = rel_sum / static_cast<double>(rel_n);
  if (unrel_n) result.unrelated_mean = unrel_sum / static_cast<double>(unrel_n);
  const auto dir = ws.dir() / "results";
  make_directories(dir);
  evaluation::save_table(dir / "pair_study.csv", t);

  StructuredText summary;
  summary.set("pair_study", "criterion", kSelectionCriterion);
  summary.set("pair_study", "related_pairs", std::to_string(rel_n));
  summary.set("pair_study", "unrelated_pairs", std::to_string(unrel_n));
  summary.set("pair_study", "related_mean_n_e_rmse", format_double(result.related_mean));
  summary.set("pair_study", "unrelated_mean_n_e_rmse", format_double(result.unrelated_mean));
  std::size_t failed = 0;
  for (const auto& r : result.rows) failed += r.ok ? 0 : 1;
  summary.set("pair_study", "failed_pairs", std::to_string(failed));

  if (cfg.oracle) {
    auto study = evaluation::similarity_study(sim);
    evaluation::save_table(dir / "similarity.csv", evaluation::similarity_table(study.rows));
    evaluation::save_table(dir / "correlations.csv", evaluation::correlation_table(study));
    summary.set("similarity", "rows_used", std::to_string(study.used));
    summary.set("similarity", "alpha", format_double(cfg.study_alpha));
    summary.set("similarity", "lambda2", format_double(cfg.study_lambda2));
    result.similarity = std::move(study);
  } else {
    ws.log("oracle runs disabled; similarity study skipped (pass --oracle)");
  }
  write_file(dir / "pair_study_summary.ini", summary.serialize());

  out << "related mean n_e_rmse " << format_double(result.related_mean) << " (" << rel_n << " pairs), unrelated "
      << format_double(result.unrelated_mean) << " (" << unrel_n << " pairs)\n";
  if (result.similarity) {
    auto show = [&](const char* name, const std::optional<evaluation::CorrelationResult>& c) {
      out << name << ": " << (c ? "r=" + format_double(c->r) + " p=" + format_double(c->p) : std::string("undefined"))
          << "\n";
    };
    show("pearson(cos_ft, cos_star)", result.similarity->ft_vs_star);
    show("pearson(cos_star, e_rmse)", result.similarity->star_vs_e_rmse);
  }
  return result;
}

// ---- Kernel SHAP budget comparison ----

struct BudgetComparison {
  double model_iou = 0.0;
  std::vector<shapley::BudgetPoint> curve;
  std::size_t inversions = 0;
  std::optional<std::size_t> crossover;
  std::size_t images = 0;
};

// Kernel SHAP at each budget against the model's single-pass attributions on
// the same explained target test images. Both are scored against the ground
// truth, which explains the target's classification-only model.
inline BudgetComparison cmd_compare_shap(const ExperimentConfig& cfg, const RunOptions& opt,
                                         std::ostream& out = std::cout) {
  require_pair(cfg);
  Workspace ws(cfg, opt, {});
  const auto sec = "selection." + pair_key(cfg.source, cfg.target);
  const auto alpha = ws.manifest().get(sec, "alpha");
  const auto lambda2 = ws.manifest().get(sec, "lambda2");
  if (!alpha || !lambda2) {
    throw MissingArtifactError("no grid-point selection for " + cfg.source + " -> " + cfg.target + " in " +
                               ws.dir().string() + "; run `xferlab pipeline` first");
  }
  const double a = parse_double(*alpha, sec + ".alpha"), l = parse_double(*lambda2, sec + ".lambda2");
  return ws.stage("compare-shap", [&] {
    const auto& test = ws.explained(cfg.target, "test");
    const auto head = ws.head(cfg.target);
    const auto& theta = ws.transferred(cfg.source, cfg.target, a, l);
    const auto& reference = ws.ft(cfg.target);

    BudgetComparison bc;
    data::Dataset subset = test;
    subset.samples.clear();
    for (const auto& s : test.samples)
      if (s.phi && subset.samples.size() < cfg.budget_images) subset.samples.push_back(s);
    bc.images = subset.samples.size();
    if (bc.images == 0) throw ContractError("no explained target test images");
    const auto K = std::min(cfg.budget_k, cfg.model.num_patches());
    model::InferenceEngine engine(cfg.model, theta, head);
    std::vector<double> ious;
    for (const auto& s : subset.samples) {
      auto o = engine.evaluate(s.pixels);
      ious.push_back(evaluation::iou_at_k(o.attribution_column(s.label), *s.phi, K));
    }
    bc.model_iou = evaluation::mean_interval(ious).mean;
    bc.curve = shapley::shap_budget_curve(cfg.model, reference.theta, head, test, cfg.budgets, cfg.shap, K,
                                          opt.workers, cfg.budget_images);
    bc.inversions = shapley::count_inversions(bc.curve);
    bc.crossover = shapley::crossover_budget(bc.curve, bc.model_iou);

    evaluation::Table t{{"budget", "kernel_iou", "kernel_iou_lo", "kernel_iou_hi", "model_iou", "images", "ridge"}, {}};
    for (const auto& p : bc.curve) {
      t.add({std::to_string(p.budget), format_double(p.score.mean), format_double(p.score.lo),
             format_double(p.score.hi), format_double(bc.model_iou), std::to_string(p.score.n),
             std::to_string(p.ridge)});
    }
    const auto dir = pair_dir(ws, cfg.source, cfg.target);
    make_directories(dir);
    evaluation::save_table(dir / "budget.tsv", t);

    StructuredText st;
    st.set("budget", "alpha", format_double(a));
    st.set("budget", "lambda2", format_double(l));
    st.set("budget", "k", std::to_string(K));
    st.set("budget", "images", std::to_string(bc.images));
    st.set("budget", "model_iou", format_double(bc.model_iou));
    st.set("budget", "inversions", std::to_string(bc.inversions));
    st.set("budget", "crossover", bc.crossover ? std::to_string(*bc.crossover) : "none");
    st.set("budget", "published_crossover", format_double(kPublishedCrossover));
    write_file(dir / "budget_summary.ini", st.serialize());

    out << "model IoU@" << K << " " << format_double(bc.model_iou) << "; kernel SHAP";
    for (const auto& p : bc.curve) out << " P=" << p.budget << ":" << format_double(p.score.mean);
    out << "; inversions " << bc.inversions << "; crossover "
        << (bc.crossover ? std::to_string(*bc.crossover) : std::string("none")) << " (published "
        << format_double(kPublishedCrossover) << ")\n";
    return bc;
  });
}

}  // namespace xferlab::cli
