#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mcsis/error.hpp"
#include "mcsis/rng.hpp"
#include "mcsis/sim.hpp"
#include "mcsis/tuning.hpp"

using namespace mcsis;

namespace {

bool contains(const std::vector<std::size_t>& v, std::size_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

bool subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::all_of(a.begin(), a.end(), [&](std::size_t x) { return contains(b, x); });
}

}  // namespace

TEST_CASE("mixture on two tight clusters") {
  Rng rng(1);
  std::vector<double> s;
  for (int i = 0; i < 500; ++i) s.push_back(rng.uniform() < 0.5 ? rng.normal(0.0, 0.01) : rng.normal(1.0, 0.01));
  const MixtureFit f = fit_mixture2(s);
  CHECK(std::abs(f.mu1) < 0.02);
  CHECK(std::abs(f.mu2 - 1.0) < 0.02);
  CHECK(f.mu1 <= f.mu2);
}

TEST_CASE("mixture log-likelihood never decreases") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(10 + seed);
    std::vector<double> s;
    for (int i = 0; i < 200; ++i) s.push_back(rng.uniform() < 0.8 ? std::abs(rng.normal(0.0, 0.05)) : rng.normal(0.4, 0.2));
    const MixtureFit f = fit_mixture2(s);
    REQUIRE(f.loglik_trace.size() >= 2);
    for (std::size_t i = 1; i < f.loglik_trace.size(); ++i) CHECK(f.loglik_trace[i] >= f.loglik_trace[i - 1] - 1e-9);
  }
}

TEST_CASE("mixture ignores score order") {
  Rng rng(2);
  std::vector<double> s;
  for (int i = 0; i < 150; ++i) s.push_back(i < 100 ? rng.normal(0.1, 0.03) : rng.normal(0.6, 0.1));
  const MixtureFit a = fit_mixture2(s);
  rng.shuffle(s);
  const MixtureFit b = fit_mixture2(s);
  CHECK(a.mu1 == doctest::Approx(b.mu1).epsilon(1e-9));
  CHECK(a.mu2 == doctest::Approx(b.mu2).epsilon(1e-9));
  CHECK(a.weight == doctest::Approx(b.weight).epsilon(1e-9));
}

TEST_CASE("mixture on degenerate scores") {
  const std::vector<double> same(50, 0.3);
  CHECK_THROWS_AS(fit_mixture2(same), Error);
  const std::vector<double> few{0.1, 0.2, 0.3};
  CHECK_THROWS_AS(fit_mixture2(few), Error);
}

TEST_CASE("knot index rules") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<double> g{0.4, 0.0, 0.3, 0.5};
  CHECK(select_knot_index(g, KnotRule::MinGap) == 1);
  CHECK(select_knot_index(g, KnotRule::MaxGap) == 3);
  const std::vector<double> ties{0.2, 0.1, 0.1, 0.3};
  CHECK(select_knot_index(ties, KnotRule::MinGap) == 1);
  const std::vector<double> with_nan{nan, 0.2, nan, 0.1};
  CHECK(select_knot_index(with_nan, KnotRule::MinGap) == 3);
  CHECK(select_knot_index(with_nan, KnotRule::MaxGap) == 1);
  const std::vector<double> none{nan, nan};
  CHECK(select_knot_index(none, KnotRule::MinGap) == -1);
  CHECK(parse_knot_rule("max-gap") == KnotRule::MaxGap);
  CHECK(std::string(to_string(KnotRule::MinGap)) == "min-gap");
}

TEST_CASE("config presets and validation") {
  const TuningConfig s = TuningConfig::small_sample();
  CHECK(s.k_min == 1);
  CHECK(s.k_max == 4);
  CHECK(s.b1 == 100);
  CHECK(s.b2 == 30);
  CHECK(s.folds == 3);
  TuningConfig bad;
  bad.b2 = 300;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = TuningConfig{};
  bad.k_min = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("folds") {
  const std::vector<int> f = make_folds(103, 10, 5);
  std::vector<int> count(10, 0);
  for (int v : f) ++count[v];
  CHECK(*std::max_element(count.begin(), count.end()) - *std::min_element(count.begin(), count.end()) <= 1);
  CHECK(make_folds(103, 10, 5) == f);
  CHECK(make_folds(103, 10, 6) != f);
  CHECK_THROWS_AS(make_folds(5, 10, 1), Error);
}

TEST_CASE("cross validation on a line picks the smallest cell") {
  Rng rng(3);
  std::vector<double> x(300);
  for (auto& v : x) v = rng.normal();
  const CvChoice c = cv_select(x, x, CvGrid{{1, 2}, 3, 6}, 10);
  CHECK(c.degree == 1);
  CHECK(c.knots == 3);
  CHECK(c.cv_score > 0.999);
}

TEST_CASE("cross validation on a cubic attains the grid maximum") {
  Rng rng(4);
  std::vector<double> x(400), y(400);
  for (std::size_t u = 0; u < x.size(); ++u) {
    x[u] = rng.normal();
    y[u] = x[u] * x[u] * x[u] - 2 * x[u] + 0.5 * rng.normal();
  }
  const CvGrid grid{{1, 2, 3}, 3, 6};
  const CvPlan plan(y, grid, 10, kDefaultSeed);
  const CvChoice c = plan.select(x);
  double best = -1.0;
  for (std::size_t cell = 0; cell < plan.num_cells(); ++cell) best = std::max(best, plan.cell_score(x, cell));
  CHECK(c.cv_score >= best - 0.02);
  CHECK(c.cv_score == doctest::Approx(plan.cell_score(x, [&] {
          for (std::size_t cell = 0; cell < plan.num_cells(); ++cell)
            if (plan.cell_spec(cell).degree == c.degree && plan.cell_spec(cell).num_knots == c.knots) return cell;
          return std::size_t{0};
        }())));
  const CvChoice three = cv_select(x, y, grid, 3);
  CHECK(std::abs(three.cv_score - c.cv_score) < 0.05);
  const CvChoice direct = cv_select(x, y, grid, 10);
  CHECK(direct.degree == c.degree);
  CHECK(direct.knots == c.knots);
}

TEST_CASE("cross validation needs enough samples") {
  std::vector<double> x(40), y(40);
  for (std::size_t u = 0; u < 40; ++u) x[u] = y[u] = double(u);
  try {
    cv_select(x, y, CvGrid{{3}, 3, 6}, 10);
    FAIL("expected TooFewSamples");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewSamples);
  }
}

TEST_CASE("step 1 with B1 = p keeps everything") {
  const SimData sim = generate(ModelId{ModelFamily::M2c}, 200, 60, 11);
  TuningConfig cfg;
  cfg.b1 = 60;
  cfg.b2 = 20;
  const Step1Result r = step1_unified(sim.data, cfg);
  CHECK(r.kept.size() == 60);
  CHECK(r.k_tilde >= 3);
  CHECK(r.k_tilde <= 6);
  CHECK(r.gaps.size() == 4);
}

TEST_CASE("step 1 keeps the active pair of model 2.c") {
  int hits = 0, strict_hits = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const SimData sim = generate(ModelId{ModelFamily::M2c}, 200, 200, 2000 + rep);
    TuningConfig cfg;
    const Step1Result r = step1_unified(sim.data, cfg);
    hits += contains(r.kept, 0) && contains(r.kept, 1);
    cfg.b1 = 100;
    const Step1Result s = step1_unified(sim.data, cfg);
    strict_hits += contains(s.kept, 0) && contains(s.kept, 1);
  }
  CHECK(hits >= 48);
  CHECK(strict_hits >= 48);
}

TEST_CASE("step 2 keeps the active set of model 1.b") {
  int hits = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const SimData sim = generate(ModelId{ModelFamily::M1b}, 300, 200, 3000 + rep);
    TuningConfig cfg;
    const Step1Result s1 = step1_unified(sim.data, cfg);
    const StageResult s2 = step2_separate(sim.data, s1.kept, cfg);
    REQUIRE(s2.kept.size() == 50);
    hits += contains(s2.kept, 0) && contains(s2.kept, 1) && contains(s2.kept, 2);
  }
  CHECK(hits >= 45);
}

TEST_CASE("stage with keep = |candidates| passes everything") {
  const SimData sim = generate(ModelId{ModelFamily::M2a}, 150, 20, 12);
  TuningConfig cfg;
  cfg.b1 = 20;
  cfg.b2 = 20;
  std::vector<std::size_t> all(20);
  for (std::size_t j = 0; j < 20; ++j) all[j] = j;
  const StageResult r = step2_separate(sim.data, all, cfg);
  CHECK(r.kept.size() == 20);
  CHECK(r.entries.size() == 20);
  for (std::size_t i = 1; i < r.entries.size(); ++i) CHECK(r.entries[i].score <= r.entries[i - 1].score);
  for (const auto& e : r.entries) {
    CHECK(e.choice.degree >= 1);
    CHECK(e.choice.degree <= 2);
  }
}

TEST_CASE("pipeline sizes, subset chain and determinism") {
  const SimData sim = generate(ModelId{ModelFamily::M2e}, 300, 120, 13);
  TuningConfig cfg;
  cfg.b1 = 100;
  cfg.b2 = 40;
  const TuningResult a = run_tuning(sim.data, cfg, 1);
  CHECK(a.b1 == 100);
  CHECK(a.b2 == 40);
  CHECK(a.b3 == 40);  // min(B2, [300 / log 300] = 52)
  CHECK(a.step1.kept.size() == a.b1);
  CHECK(a.step2.kept.size() == a.b2);
  CHECK(a.step3.kept.size() == a.b3);
  CHECK(subset(a.step2.kept, a.step1.kept));
  CHECK(subset(a.step3.kept, a.step2.kept));
  for (const auto& e : a.step3.entries) CHECK(e.choice.degree <= 3);
  // composite ranking starts with the step-3 order
  REQUIRE(a.ranking.size() == 120);
  for (std::size_t i = 0; i < a.b3; ++i) CHECK(a.ranking[i] == a.step3.kept[i]);
  std::vector<std::size_t> sorted = a.ranking;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t j = 0; j < sorted.size(); ++j) CHECK(sorted[j] == j);

  const TuningResult b = run_tuning(sim.data, cfg, 3);
  CHECK(a.ranking == b.ranking);
  CHECK(a.step1.scores == b.step1.scores);
  const TuningResult c = run_tuning(sim.data, cfg, 1);
  CHECK(a.ranking == c.ranking);

  const ScreeningResult sr = a.as_screening();
  CHECK(sr.ranking == a.ranking);
  CHECK(sr.method == ScoreKind::McSpline);

  TuningConfig small;
  small.b1 = 30;
  small.b2 = 10;
  small.b3 = 5;
  const TuningResult s = run_tuning(sim.data, small, 1);
  CHECK(s.step3.kept.size() == 5);
  CHECK(subset(s.step3.kept, s.step2.kept));
  CHECK(subset(s.step2.kept, s.step1.kept));
}
