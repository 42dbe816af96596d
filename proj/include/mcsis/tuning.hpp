#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcsis/dataset.hpp"
#include "mcsis/screening.hpp"

namespace mcsis {

inline constexpr std::uint64_t kDefaultSeed = 20140527;

// Which mixture-mean gap picks the unified knot count in step 1.
enum class KnotRule { MinGap, MaxGap };

const char* to_string(KnotRule rule);
KnotRule parse_knot_rule(const std::string& name);

struct TuningConfig {
  int k_min = 3;   // K1
  int k_max = 6;   // K2
  std::size_t b1 = 200;
  std::size_t b2 = 50;
  std::size_t b3 = 0;  // 0: min(B2, [n / log n])
  int folds = 10;  // M
  KnotRule knot_rule = KnotRule::MinGap;
  std::uint64_t seed = kDefaultSeed;
  double ridge = 1e-8;

  void validate() const;

  // K1 = 1, K2 = 4, B1 = 100, B2 = 30, M = 3 for very small samples.
  static TuningConfig small_sample();
};

struct MixtureFit {
  double mu1 = 0.0, mu2 = 0.0;  // mu1 <= mu2
  double sigma1 = 1.0, sigma2 = 1.0;
  double weight = 0.5;  // mixing weight of the first component
  double loglik = 0.0;
  int iterations = 0;
  std::vector<double> loglik_trace;  // of the retained restart
};

// Two-component Gaussian mixture by EM, best of five restarts initialised by
// splitting the sorted scores at fixed fractions. Throws DegenerateInput with
// fewer than 10 finite scores or no spread.
MixtureFit fit_mixture2(std::span<const double> scores, int max_iter = 500, double tol = 1e-10);

// Index of the chosen knot count under the rule; NaN gaps are skipped, ties
// go to the smaller k. Returns -1 when every gap is NaN.
int select_knot_index(std::span<const double> gaps, KnotRule rule);

struct Step1Result {
  int k_tilde = 0;
  std::vector<int> k_values;
  std::vector<double> gaps;  // |mu1(k) - mu2(k)|, NaN when the mixture failed
  std::vector<double> scores;  // lambda_hat at k_tilde, length p
  std::vector<std::size_t> kept;  // top B1 in score order
  std::vector<std::string> warnings;
};

// Unified linear scheme over K1..K2 with mixture-gap knot selection.
Step1Result step1_unified(const Dataset& data, const TuningConfig& cfg, int workers = 1);

// Contiguous folds after a seeded shuffle; fold_of[u] in [0, folds).
std::vector<int> make_folds(std::size_t n, int folds, std::uint64_t seed);

struct CvChoice {
  int degree = 1;
  int knots = 1;
  double cv_score = 0.0;
};

struct CvGrid {
  std::vector<int> degrees;
  int k_min = 3;
  int k_max = 6;
};

// Training-fold response models for every grid cell, shared across predictors.
class CvPlan {
 public:
  CvPlan(std::span<const double> y, const CvGrid& grid, int folds, std::uint64_t seed, double ridge = 1e-8);
  CvPlan(CvPlan&&) noexcept;
  CvPlan& operator=(CvPlan&&) noexcept;
  ~CvPlan();

  CvChoice select(std::span<const double> x) const;
  // Mean held-out correlation for one cell.
  double cell_score(std::span<const double> x, std::size_t cell) const;

  std::size_t num_cells() const { return cells_.size(); }
  SplineSpec cell_spec(std::size_t cell) const { return cells_[cell]; }

 private:
  struct FoldCell;
  std::vector<SplineSpec> cells_;
  std::vector<std::vector<std::size_t>> train_;
  std::vector<std::vector<std::size_t>> test_;
  std::vector<std::vector<FoldCell>> fold_cells_;  // [fold][cell]
  double ridge_;
};

// M-fold cross validation of (degree, knots) by held-out correlation of the
// fitted transformations. Ties (within 1e-9) go to smaller d_n, then smaller
// degree. Throws TooFewSamples unless n >= M (max d_n + 2).
CvChoice cv_select(std::span<const double> x, std::span<const double> y, const CvGrid& grid, int folds,
                   std::uint64_t seed = kDefaultSeed, double ridge = 1e-8);

struct StageEntry {
  std::size_t index = 0;
  CvChoice choice;
  double score = 0.0;  // full-sample lambda_hat at the chosen cell
  bool failed = false;
};

struct StageResult {
  std::vector<StageEntry> entries;  // one per input index, by score descending
  std::vector<std::size_t> kept;    // top B in score order
  std::vector<std::string> warnings;
};

// Separate scheme: per-variable CV over `degrees`, rescoring, keep top `keep`.
StageResult separate_stage(const Dataset& data, std::span<const std::size_t> candidates, const std::vector<int>& degrees,
                           std::size_t keep, const TuningConfig& cfg, int workers = 1);
StageResult step2_separate(const Dataset& data, std::span<const std::size_t> kept, const TuningConfig& cfg,
                           int workers = 1);
StageResult step3_separate(const Dataset& data, std::span<const std::size_t> kept, const TuningConfig& cfg,
                           int workers = 1);

struct TuningResult {
  Step1Result step1;
  StageResult step2;
  StageResult step3;
  std::size_t b1 = 0, b2 = 0, b3 = 0;  // effective sizes
  // Step-3 order over step-2 survivors, then step-2 order over the rest of
  // step 1, then step-1 order.
  std::vector<std::size_t> ranking;

  ScreeningResult as_screening() const;
};

TuningResult run_tuning(const Dataset& data, const TuningConfig& cfg, int workers = 1);

}  // namespace mcsis
