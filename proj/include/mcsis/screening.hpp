#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcsis/ace.hpp"
#include "mcsis/baselines.hpp"
#include "mcsis/bspline.hpp"
#include "mcsis/dataset.hpp"

namespace mcsis {

struct MethodConfig {
  SplineSpec mc_spec{2, 4, KnotPlacement::Quantile};
  std::optional<SplineSpec> nis_spec;  // empty: cubic rule of thumb for the sample size
  AceConfig ace;
  double ridge = 1e-8;
};

struct ScreeningResult {
  ScoreKind method = ScoreKind::McSpline;
  std::vector<double> scores;         // length p
  std::vector<std::size_t> ranking;   // 0-based columns, best first, ties by index
  std::vector<std::size_t> selected;  // in ranking order
  std::optional<double> threshold_used;
  std::optional<std::size_t> size_used;
  std::vector<bool> failed;           // per column: estimation failed, scored 0
  std::vector<std::string> warnings;

  // 1-based position of column j in the ranking.
  std::size_t rank_of(std::size_t j) const;
};

// Descending order of scores with ties broken by ascending index.
std::vector<std::size_t> rank_scores(std::span<const double> scores);

// Scores every column with `score(j)`; a throwing column scores 0 and is
// flagged. Results are gathered by index, so worker count does not matter.
struct ColumnScores {
  std::vector<double> scores;
  std::vector<bool> failed;
  std::vector<std::string> warnings;
};
ColumnScores score_columns(std::size_t p, int workers, const std::function<double(std::size_t)>& score,
                           const std::vector<std::string>& names = {});

// Throws EmptyDataset, AllColumnsDegenerate (no column could be scored).
ScreeningResult screen(const Dataset& data, ScoreKind method, const MethodConfig& cfg = {}, int workers = 1);

// Builds a result from externally computed scores (e.g. the tuned pipeline).
ScreeningResult make_result(ScoreKind method, std::vector<double> scores, std::vector<std::size_t> ranking);

// Top-m columns of the ranking. Throws InvalidSize unless 1 <= m <= p.
std::vector<std::size_t> select_by_size(const ScreeningResult& result, std::size_t m);
// Columns with score >= nu, in ranking order.
std::vector<std::size_t> select_by_threshold(const ScreeningResult& result, double nu);

// [n / log n]
std::size_t default_model_size(std::size_t n);

}  // namespace mcsis
