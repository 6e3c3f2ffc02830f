#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "xferlab/evaluation/stats.hpp"
#include "xferlab/evaluation/table.hpp"
#include "xferlab/util/structured_text.hpp"

namespace xferlab::evaluation {

// One ordered domain pair of a similarity study. `e_rmse` and `accuracy` are
// normalized against the target's classification-only model at the study
// point.
struct SimilarityRow {
  std::string source;
  std::string target;
  bool related = false;
  double cos_star = 0.0;  // cos(tau^S_star, tau^T_star)
  double cos_ft = 0.0;    // cos(tau^S_ft, tau^T_ft)
  double e_rmse = 0.0;
  double accuracy = 0.0;
  bool degenerate = false;    // source == target
  bool low_accuracy = false;  // accuracy below half the reference

  bool operator==(const SimilarityRow&) const = default;
};

struct SimilarityStudy {
  std::vector<SimilarityRow> rows;
  std::size_t used = 0;  // rows entering the correlations
  std::optional<CorrelationResult> star_vs_e_rmse;
  std::optional<CorrelationResult> ft_vs_star;
  std::optional<CorrelationResult> ft_vs_e_rmse;
};

// Flags the rows and correlates the columns over the non-degenerate ones.
// Correlations that are undefined (fewer than three rows, zero variance)
// stay empty.
inline SimilarityStudy similarity_study(std::vector<SimilarityRow> rows) {
  SimilarityStudy out;
  std::vector<double> cs, cf, er;
  for (auto& r : rows) {
    r.degenerate = r.source == r.target;
    r.low_accuracy = r.accuracy < 0.5;
    if (r.degenerate) continue;
    cs.push_back(r.cos_star);
    cf.push_back(r.cos_ft);
    er.push_back(r.e_rmse);
  }
  out.used = cs.size();
  auto safe = [](const std::vector<double>& x, const std::vector<double>& y) -> std::optional<CorrelationResult> {
    try {
      return pearson(x, y);
    } catch (const ContractError&) {
      return std::nullopt;
    } catch (const UndefinedError&) {
      return std::nullopt;
    }
  };
  out.star_vs_e_rmse = safe(cs, er);
  out.ft_vs_star = safe(cf, cs);
  out.ft_vs_e_rmse = safe(cf, er);
  out.rows = std::move(rows);
  return out;
}

inline const std::vector<std::string>& similarity_header() {
  static const std::vector<std::string> h = {"source",   "target",     "related",     "cos_star", "cos_ft",
                                             "e_rmse",   "accuracy",   "degenerate",  "low_accuracy"};
  return h;
}

inline Table similarity_table(const std::vector<SimilarityRow>& rows) {
  Table t{similarity_header(), {}};
  for (const auto& r : rows) {
    t.add({r.source, r.target, r.related ? "1" : "0", format_double(r.cos_star), format_double(r.cos_ft),
           format_double(r.e_rmse), format_double(r.accuracy), r.degenerate ? "1" : "0", r.low_accuracy ? "1" : "0"});
  }
  return t;
}

inline std::vector<SimilarityRow> similarity_rows(const Table& t) {
  if (t.header != similarity_header()) throw FormatError("similarity table has an unexpected header");
  std::vector<SimilarityRow> out;
  for (const auto& c : t.rows) {
    SimilarityRow r;
    r.source = c[0];
    r.target = c[1];
    r.related = parse_bool(c[2], "related");
    r.cos_star = parse_double(c[3], "cos_star");
    r.cos_ft = parse_double(c[4], "cos_ft");
    r.e_rmse = parse_double(c[5], "e_rmse");
    r.accuracy = parse_double(c[6], "accuracy");
    r.degenerate = parse_bool(c[7], "degenerate");
    r.low_accuracy = parse_bool(c[8], "low_accuracy");
    out.push_back(std::move(r));
  }
  return out;
}

inline Table correlation_table(const SimilarityStudy& s) {
  Table t{{"pair", "r", "p", "n"}, {}};
  auto add = [&](const char* name, const std::optional<CorrelationResult>& c) {
    if (c) {
      t.add({name, format_double(c->r), format_double(c->p), std::to_string(c->n)});
    } else {
      t.add({name, "nan", "nan", std::to_string(s.used)});
    }
  };
  add("cos_star~e_rmse", s.star_vs_e_rmse);
  add("cos_ft~cos_star", s.ft_vs_star);
  add("cos_ft~e_rmse", s.ft_vs_e_rmse);
  return t;
}

}  // namespace xferlab::evaluation
