#include "mcsis/tuning.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>

#include "mcsis/error.hpp"
#include "mcsis/maxcorr.hpp"
#include "mcsis/parallel.hpp"
#include "mcsis/rng.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

const char* to_string(KnotRule rule) { return rule == KnotRule::MinGap ? "min-gap" : "max-gap"; }

KnotRule parse_knot_rule(const std::string& name) {
  if (name == "min-gap" || name == "min") return KnotRule::MinGap;
  if (name == "max-gap" || name == "max") return KnotRule::MaxGap;
  throw Error(ErrorCode::InvalidArgument, "knot rule must be min-gap or max-gap, got '" + name + "'");
}

void TuningConfig::validate() const {
  if (k_min < 1 || k_min > k_max) throw Error(ErrorCode::InvalidArgument, "need 1 <= K1 <= K2");
  if (b1 < 1 || b2 < 1 || b2 > b1) throw Error(ErrorCode::InvalidArgument, "need B1 >= B2 >= 1");
  if (b3 > b2) throw Error(ErrorCode::InvalidArgument, "need B2 >= B3");
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 folds");
  if (ridge < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
}

TuningConfig TuningConfig::small_sample() {
  TuningConfig c;
  c.k_min = 1;
  c.k_max = 4;
  c.b1 = 100;
  c.b2 = 30;
  c.folds = 3;
  return c;
}

// ---------------------------------------------------------------------------
// Two-component mixture

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double log_normal_pdf(double x, double mu, double var) {
  const double d = x - mu;
  return -kLogSqrt2Pi - 0.5 * std::log(var) - 0.5 * d * d / var;
}

struct EmState {
  double mu[2];
  double var[2];
  double w;  // weight of component 0
};

MixtureFit run_em(std::span<const double> x, EmState s, double var_floor, int max_iter, double tol) {
  const std::size_t n = x.size();
  std::vector<double> r0(n);
  MixtureFit fit;
  double prev = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    // E-step
    double ll = 0.0;
    const double lw0 = std::log(s.w), lw1 = std::log1p(-s.w);
    for (std::size_t u = 0; u < n; ++u) {
      const double a = lw0 + log_normal_pdf(x[u], s.mu[0], s.var[0]);
      const double b = lw1 + log_normal_pdf(x[u], s.mu[1], s.var[1]);
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      ll += lse;
      r0[u] = std::exp(a - lse);
    }
    fit.loglik_trace.push_back(ll);
    fit.loglik = ll;
    fit.iterations = it + 1;
    fit.mu1 = s.mu[0];
    fit.mu2 = s.mu[1];
    fit.sigma1 = std::sqrt(s.var[0]);
    fit.sigma2 = std::sqrt(s.var[1]);
    fit.weight = s.w;
    if (it > 0 && ll - prev < tol * (1.0 + std::abs(ll))) break;
    prev = ll;

    // M-step
    double n0 = 0.0, s0 = 0.0, s1 = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      n0 += r0[u];
      s0 += r0[u] * x[u];
      s1 += (1.0 - r0[u]) * x[u];
    }
    const double n1 = static_cast<double>(n) - n0;
    if (n0 <= 0.0 || n1 <= 0.0) break;  // one component emptied out
    s.mu[0] = s0 / n0;
    s.mu[1] = s1 / n1;
    double v0 = 0.0, v1 = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      v0 += r0[u] * (x[u] - s.mu[0]) * (x[u] - s.mu[0]);
      v1 += (1.0 - r0[u]) * (x[u] - s.mu[1]) * (x[u] - s.mu[1]);
    }
    s.var[0] = std::max(v0 / n0, var_floor);
    s.var[1] = std::max(v1 / n1, var_floor);
    s.w = std::clamp(n0 / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
  }
  if (fit.mu1 > fit.mu2) {
    std::swap(fit.mu1, fit.mu2);
    std::swap(fit.sigma1, fit.sigma2);
    fit.weight = 1.0 - fit.weight;
  }
  return fit;
}

}  // namespace

MixtureFit fit_mixture2(std::span<const double> scores, int max_iter, double tol) {
  std::vector<double> x;
  x.reserve(scores.size());
  for (double v : scores)
    if (std::isfinite(v)) x.push_back(v);
  if (x.size() < 10) throw Error(ErrorCode::DegenerateInput, "mixture fit needs at least 10 finite scores");
  const double total_var = variance(x);
  if (!(total_var > 0.0) || !has_spread(x)) throw Error(ErrorCode::DegenerateInput, "scores have no spread");
  const double var_floor = 1e-8 * total_var;

  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  static constexpr std::array<double, 5> kSplits{0.5, 0.35, 0.65, 0.2, 0.8};
  std::optional<MixtureFit> best;
  for (double q : kSplits) {
    const auto m = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(q * static_cast<double>(n))), 1, n - 1);
    const std::span<const double> lower(sorted.data(), m);
    const std::span<const double> upper(sorted.data() + m, n - m);
    EmState s{};
    s.mu[0] = mean(lower);
    s.mu[1] = mean(upper);
    s.var[0] = std::max(variance(lower), 1e-3 * total_var);
    s.var[1] = std::max(variance(upper), 1e-3 * total_var);
    s.w = static_cast<double>(m) / static_cast<double>(n);
    MixtureFit fit = run_em(sorted, s, var_floor, max_iter, tol);
    if (!best || fit.loglik > best->loglik) best = std::move(fit);
  }
  return *best;
}

int select_knot_index(std::span<const double> gaps, KnotRule rule) {
  int best = -1;
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    if (!std::isfinite(gaps[i])) continue;
    if (best < 0) {
      best = static_cast<int>(i);
      continue;
    }
    const double g = gaps[i], b = gaps[static_cast<std::size_t>(best)];
    if (rule == KnotRule::MinGap ? g < b : g > b) best = static_cast<int>(i);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Step 1

namespace {

std::vector<std::size_t> top_indices(std::span<const double> scores, std::span<const std::size_t> candidates,
                                     std::size_t keep) {
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  order.resize(std::min(keep, order.size()));
  return order;
}

}  // namespace

Step1Result step1_unified(const Dataset& data, const TuningConfig& cfg, int workers) {
  cfg.validate();
  data.validate();
  const std::size_t p = data.p();
  McOptions options;
  options.ridge = cfg.ridge;

  Step1Result res;
  std::vector<std::vector<double>> all_scores;
  for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
    const SplineSpec spec{1, k, KnotPlacement::Quantile};
    res.k_values.push_back(k);
    std::vector<double> scores(p, 0.0);
    std::vector<double> usable;
    try {
      const ResponseModel response = prepare_response(data.y, spec, cfg.ridge);
      ColumnScores cs = score_columns(
          p, workers, [&](std::size_t j) { return estimate_mc(response, data.column(j), spec, options).lambda_hat; },
          data.column_names);
      scores = cs.scores;
      for (std::size_t j = 0; j < p; ++j)
        if (!cs.failed[j]) usable.push_back(scores[j]);
      if (k == cfg.k_min)
        for (auto& w : cs.warnings) res.warnings.push_back(std::move(w));
    } catch (const Error& e) {
      res.warnings.push_back("k=" + std::to_string(k) + ": " + e.what());
    }
    double gap = std::numeric_limits<double>::quiet_NaN();
    try {
      const MixtureFit fit = fit_mixture2(usable);
      gap = std::abs(fit.mu2 - fit.mu1);
    } catch (const Error& e) {
      res.warnings.push_back("k=" + std::to_string(k) + ": mixture fit failed: " + e.what());
    }
    res.gaps.push_back(gap);
    all_scores.push_back(std::move(scores));
  }

  int idx = select_knot_index(res.gaps, cfg.knot_rule);
  if (idx < 0) {
    res.warnings.push_back("no usable mixture fit; using K1");
    idx = 0;
  }
  res.k_tilde = res.k_values[static_cast<std::size_t>(idx)];
  res.scores = std::move(all_scores[static_cast<std::size_t>(idx)]);
  std::vector<std::size_t> all(p);
  std::iota(all.begin(), all.end(), std::size_t{0});
  res.kept = top_indices(res.scores, all, std::min(cfg.b1, p));
  return res;
}

// ---------------------------------------------------------------------------
// Cross validation

std::vector<int> make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n) throw Error(ErrorCode::InvalidArgument, "need 2 <= folds <= n");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(hash_combine(seed, 0xf01d5));
  rng.shuffle(perm);
  std::vector<int> fold_of(n);
  const auto m = static_cast<std::size_t>(folds);
  for (std::size_t r = 0; r < n; ++r) fold_of[perm[r]] = static_cast<int>(r * m / n);
  return fold_of;
}

struct CvPlan::FoldCell {
  std::optional<ResponseModel> response;
  Eigen::MatrixXd test_design;  // held-out y through the training basis
};

CvPlan::CvPlan(CvPlan&&) noexcept = default;
CvPlan& CvPlan::operator=(CvPlan&&) noexcept = default;
CvPlan::~CvPlan() = default;

CvPlan::CvPlan(std::span<const double> y, const CvGrid& grid, int folds, std::uint64_t seed, double ridge)
    : ridge_(ridge) {
  if (grid.degrees.empty() || grid.k_min < 1 || grid.k_min > grid.k_max)
    throw Error(ErrorCode::InvalidArgument, "empty cross-validation grid");
  int max_dim = 0;
  for (int deg : grid.degrees)
    for (int k = grid.k_min; k <= grid.k_max; ++k) {
      const SplineSpec spec{deg, k, KnotPlacement::Quantile};
      spec.validate();
      cells_.push_back(spec);
      max_dim = std::max(max_dim, spec.dim());
    }
  const std::size_t n = y.size();
  if (n < static_cast<std::size_t>(folds) * static_cast<std::size_t>(max_dim + 2))
    throw Error(ErrorCode::TooFewSamples, "cross validation needs n >= M (max d_n + 2)");

  const std::vector<int> fold_of = make_folds(n, folds, seed);
  train_.resize(static_cast<std::size_t>(folds));
  test_.resize(static_cast<std::size_t>(folds));
  for (std::size_t u = 0; u < n; ++u)
    for (int f = 0; f < folds; ++f) (f == fold_of[u] ? test_ : train_)[static_cast<std::size_t>(f)].push_back(u);

  fold_cells_.resize(static_cast<std::size_t>(folds));
  for (std::size_t f = 0; f < train_.size(); ++f) {
    std::vector<double> ytr, yte;
    for (std::size_t u : train_[f]) ytr.push_back(y[u]);
    for (std::size_t u : test_[f]) yte.push_back(y[u]);
    for (const SplineSpec& spec : cells_) {
      FoldCell fc;
      try {
        fc.response.emplace(prepare_response(ytr, spec, ridge));
        fc.test_design = fc.response->basis.design_matrix(yte);
      } catch (const Error&) {
        fc.response.reset();
      }
      fold_cells_[f].push_back(std::move(fc));
    }
  }
}

double CvPlan::cell_score(std::span<const double> x, std::size_t cell) const {
  const SplineSpec& spec = cells_[cell];
  McOptions options;
  options.ridge = ridge_;
  double total = 0.0;
  std::vector<double> xtr, theta, phi;
  for (std::size_t f = 0; f < train_.size(); ++f) {
    const FoldCell& fc = fold_cells_[f][cell];
    if (!fc.response) continue;
    xtr.clear();
    for (std::size_t u : train_[f]) xtr.push_back(x[u]);
    try {
      const McEstimate est = estimate_mc(*fc.response, xtr, spec, options);
      const Eigen::VectorXd th = fc.test_design * est.alpha_hat;
      theta.assign(th.data(), th.data() + th.size());
      phi.clear();
      for (std::size_t u : test_[f]) phi.push_back(transform_x(est, x[u]));
      total += pearson(theta, phi);
    } catch (const Error&) {
      // degenerate training data for this fold scores 0
    }
  }
  return total / static_cast<double>(train_.size());
}

CvChoice CvPlan::select(std::span<const double> x) const {
  constexpr double kTieTol = 1e-9;
  std::vector<double> scores(cells_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    scores[c] = cell_score(x, c);
    best = std::max(best, scores[c]);
  }
  std::size_t pick = cells_.size();
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    if (scores[c] < best - kTieTol) continue;
    if (pick == cells_.size()) {
      pick = c;
      continue;
    }
    const SplineSpec& a = cells_[c];
    const SplineSpec& b = cells_[pick];
    if (a.dim() < b.dim() || (a.dim() == b.dim() && a.degree < b.degree)) pick = c;
  }
  return {cells_[pick].degree, cells_[pick].num_knots, scores[pick]};
}

CvChoice cv_select(std::span<const double> x, std::span<const double> y, const CvGrid& grid, int folds,
                   std::uint64_t seed, double ridge) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  return CvPlan(y, grid, folds, seed, ridge).select(x);
}

// ---------------------------------------------------------------------------
// Steps 2 and 3

StageResult separate_stage(const Dataset& data, std::span<const std::size_t> candidates, const std::vector<int>& degrees,
                           std::size_t keep, const TuningConfig& cfg, int workers) {
  const CvGrid grid{degrees, cfg.k_min, cfg.k_max};
  const CvPlan plan(data.y, grid, cfg.folds, cfg.seed, cfg.ridge);
  std::vector<std::optional<ResponseModel>> full(plan.num_cells());
  for (std::size_t c = 0; c < plan.num_cells(); ++c) {
    try {
      full[c].emplace(prepare_response(data.y, plan.cell_spec(c), cfg.ridge));
    } catch (const Error&) {
    }
  }
  McOptions options;
  options.ridge = cfg.ridge;

  StageResult res;
  res.entries.resize(candidates.size());
  std::vector<std::string> messages(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    StageEntry& e = res.entries[i];
    e.index = candidates[i];
    const auto x = data.column(e.index);
    try {
      e.choice = plan.select(x);
      const SplineSpec spec{e.choice.degree, e.choice.knots, KnotPlacement::Quantile};
      std::size_t cell = 0;
      while (!(plan.cell_spec(cell) == spec)) ++cell;
      if (!full[cell]) throw Error(ErrorCode::DegenerateInput, "response basis unavailable");
      e.score = estimate_mc(*full[cell], x, spec, options).lambda_hat;
    } catch (const std::exception& ex) {
      e.failed = true;
      e.score = 0.0;
      messages[i] = ex.what();
    }
  });
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (res.entries[i].failed) res.warnings.push_back(data.column_name(candidates[i]) + ": " + messages[i]);

  std::stable_sort(res.entries.begin(), res.entries.end(), [](const StageEntry& a, const StageEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  });
  const std::size_t m = std::min(keep, res.entries.size());
  for (std::size_t i = 0; i < m; ++i) res.kept.push_back(res.entries[i].index);
  return res;
}

StageResult step2_separate(const Dataset& data, std::span<const std::size_t> kept, const TuningConfig& cfg,
                           int workers) {
  return separate_stage(data, kept, {1, 2}, cfg.b2, cfg, workers);
}

StageResult step3_separate(const Dataset& data, std::span<const std::size_t> kept, const TuningConfig& cfg,
                           int workers) {
  const std::size_t b3 = cfg.b3 == 0 ? std::min(cfg.b2, default_model_size(data.n())) : cfg.b3;
  return separate_stage(data, kept, {1, 2, 3}, b3, cfg, workers);
}

TuningResult run_tuning(const Dataset& data, const TuningConfig& cfg, int workers) {
  cfg.validate();
  data.validate();
  TuningResult res;
  res.step1 = step1_unified(data, cfg, workers);
  res.b1 = res.step1.kept.size();
  res.b2 = std::min(cfg.b2, res.b1);
  res.b3 = std::min(cfg.b3 == 0 ? std::min(cfg.b2, default_model_size(data.n())) : cfg.b3, res.b2);

  TuningConfig stage_cfg = cfg;
  stage_cfg.b2 = res.b2;
  stage_cfg.b3 = res.b3;
  res.step2 = step2_separate(data, res.step1.kept, stage_cfg, workers);
  res.step3 = step3_separate(data, res.step2.kept, stage_cfg, workers);

  std::vector<char> placed(data.p(), 0);
  for (const StageEntry& e : res.step3.entries) {
    res.ranking.push_back(e.index);
    placed[e.index] = 1;
  }
  for (const StageEntry& e : res.step2.entries)
    if (!placed[e.index]) {
      res.ranking.push_back(e.index);
      placed[e.index] = 1;
    }
  for (std::size_t j : rank_scores(res.step1.scores))
    if (!placed[j]) {
      res.ranking.push_back(j);
      placed[j] = 1;
    }
  return res;
}

ScreeningResult TuningResult::as_screening() const {
  std::vector<double> scores = step1.scores;
  for (const StageEntry& e : step2.entries) scores[e.index] = e.score;
  for (const StageEntry& e : step3.entries) scores[e.index] = e.score;
  ScreeningResult r = make_result(ScoreKind::McSpline, std::move(scores), ranking);
  r.selected = step3.kept;
  r.size_used = step3.kept.size();
  r.warnings = step1.warnings;
  r.warnings.insert(r.warnings.end(), step2.warnings.begin(), step2.warnings.end());
  r.warnings.insert(r.warnings.end(), step3.warnings.begin(), step3.warnings.end());
  return r;
}

}  // namespace mcsis
