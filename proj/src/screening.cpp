#include "mcsis/screening.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "mcsis/error.hpp"
#include "mcsis/maxcorr.hpp"
#include "mcsis/parallel.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

std::size_t ScreeningResult::rank_of(std::size_t j) const {
  const auto it = std::find(ranking.begin(), ranking.end(), j);
  if (it == ranking.end()) throw Error(ErrorCode::InvalidArgument, "column not in ranking");
  return static_cast<std::size_t>(it - ranking.begin()) + 1;
}

std::vector<std::size_t> rank_scores(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

ColumnScores score_columns(std::size_t p, int workers, const std::function<double(std::size_t)>& score,
                           const std::vector<std::string>& names) {
  ColumnScores out;
  out.scores.assign(p, 0.0);
  std::vector<std::string> messages(p);
  std::vector<char> failed(p, 0);
  parallel_for(p, workers, [&](std::size_t j) {
    try {
      const double s = score(j);
      if (std::isfinite(s)) {
        out.scores[j] = s;
      } else {
        failed[j] = 1;
        messages[j] = "non-finite score";
      }
    } catch (const std::exception& e) {
      failed[j] = 1;
      messages[j] = e.what();
    }
  });
  out.failed.assign(p, false);
  for (std::size_t j = 0; j < p; ++j) {
    if (!failed[j]) continue;
    out.failed[j] = true;
    const std::string name = j < names.size() && !names[j].empty() ? names[j] : "X" + std::to_string(j + 1);
    out.warnings.push_back(name + ": " + messages[j]);
  }
  return out;
}

ScreeningResult make_result(ScoreKind method, std::vector<double> scores, std::vector<std::size_t> ranking) {
  ScreeningResult r;
  r.method = method;
  r.scores = std::move(scores);
  r.ranking = std::move(ranking);
  r.failed.assign(r.scores.size(), false);
  return r;
}

ScreeningResult screen(const Dataset& data, ScoreKind method, const MethodConfig& cfg, int workers) {
  data.validate();
  if (!has_spread(data.y)) throw Error(ErrorCode::AllColumnsDegenerate, "response is constant");
  const std::size_t p = data.p();

  std::function<double(std::size_t)> score;
  std::shared_ptr<ResponseModel> response;
  std::shared_ptr<DcorResponse> dcor_y;
  SplineSpec nis_spec = cfg.nis_spec.value_or(nis_default_spec(data.n()));
  McOptions options;
  options.ridge = cfg.ridge;

  try {
    switch (method) {
      case ScoreKind::Sis:
        score = [&](std::size_t j) { return sis_score(data.column(j), data.y); };
        break;
      case ScoreKind::Nis:
        score = [&](std::size_t j) { return nis_score(data.column(j), data.y, nis_spec, cfg.ridge); };
        break;
      case ScoreKind::DcSis:
        dcor_y = std::make_shared<DcorResponse>(data.y);
        score = [&](std::size_t j) { return dcor_y->score(data.column(j)); };
        break;
      case ScoreKind::McAce:
        score = [&](std::size_t j) { return ace_mc(data.column(j), data.y, cfg.ace).rho_hat; };
        break;
      case ScoreKind::McSpline:
        response = std::make_shared<ResponseModel>(prepare_response(data.y, cfg.mc_spec, cfg.ridge));
        score = [&](std::size_t j) { return estimate_mc(*response, data.column(j), cfg.mc_spec, options).lambda_hat; };
        break;
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::AllColumnsDegenerate, std::string("response cannot be used: ") + e.what());
  }

  ColumnScores cs = score_columns(p, workers, score, data.column_names);
  if (std::all_of(cs.failed.begin(), cs.failed.end(), [](bool f) { return f; }))
    throw Error(ErrorCode::AllColumnsDegenerate, "no predictor could be scored");

  ScreeningResult r = make_result(method, cs.scores, rank_scores(cs.scores));
  r.failed = std::move(cs.failed);
  r.warnings = std::move(cs.warnings);
  return r;
}

std::vector<std::size_t> select_by_size(const ScreeningResult& result, std::size_t m) {
  if (m < 1 || m > result.ranking.size())
    throw Error(ErrorCode::InvalidSize, "model size must lie in [1, " + std::to_string(result.ranking.size()) + "]");
  return {result.ranking.begin(), result.ranking.begin() + static_cast<std::ptrdiff_t>(m)};
}

std::vector<std::size_t> select_by_threshold(const ScreeningResult& result, double nu) {
  std::vector<std::size_t> out;
  for (std::size_t j : result.ranking)
    if (result.scores[j] >= nu) out.push_back(j);
  return out;
}

std::size_t default_model_size(std::size_t n) {
  if (n < 2) return 1;
  const double v = static_cast<double>(n) / std::log(static_cast<double>(n));
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(v)));
}

}  // namespace mcsis
