#include "mcsis/ace.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mcsis/error.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

void AceConfig::validate() const {
  if (!(smoother_span > 0.0 && smoother_span <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "ACE smoother span must lie in (0, 1]");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "ACE max_iter must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "ACE tol must be > 0");
}

RankSmoother::RankSmoother(std::span<const double> predictor, double span, AceSmoother kind) : kind_(kind) {
  const std::size_t n = predictor.size();
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::size_t a, std::size_t b) { return predictor[a] < predictor[b]; });
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && predictor[order_[j]] == predictor[order_[i]]) ++j;
    group_end_.push_back(j);
    i = j;
  }
  window_ = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))));

  // A tie group joins the bin of its first position; a short trailing bin
  // merges into the previous one.
  const std::size_t full_bins = std::max<std::size_t>(1, n / window_);
  bin_of_group_.resize(group_end_.size());
  std::size_t start = 0;
  for (std::size_t g = 0; g < group_end_.size(); ++g) {
    bin_of_group_[g] = static_cast<int>(std::min(start / window_, full_bins - 1));
    start = group_end_[g];
  }
  num_bins_ = static_cast<int>(full_bins);
}

std::vector<double> RankSmoother::apply(std::span<const double> target) const {
  const std::size_t n = order_.size();
  std::vector<double> out(n, 0.0);
  if (kind_ == AceSmoother::RankBin) {
    std::vector<double> sum(static_cast<std::size_t>(num_bins_), 0.0);
    std::vector<double> count(static_cast<std::size_t>(num_bins_), 0.0);
    std::size_t start = 0;
    for (std::size_t g = 0; g < group_end_.size(); ++g) {
      const auto b = static_cast<std::size_t>(bin_of_group_[g]);
      for (std::size_t i = start; i < group_end_[g]; ++i) {
        sum[b] += target[order_[i]];
        count[b] += 1.0;
      }
      start = group_end_[g];
    }
    start = 0;
    for (std::size_t g = 0; g < group_end_.size(); ++g) {
      const auto b = static_cast<std::size_t>(bin_of_group_[g]);
      const double v = sum[b] / count[b];
      for (std::size_t i = start; i < group_end_[g]; ++i) out[order_[i]] = v;
      start = group_end_[g];
    }
    return out;
  }

  // Running mean over a centred window of sorted positions, then averaged
  // across tie groups so the result is a function of the predictor value.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + target[order_[i]];
  const std::size_t half = window_ / 2;
  std::vector<double> by_pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i > half ? i - half : 0;
    std::size_t hi = std::min(n, lo + window_);
    lo = hi > window_ ? hi - window_ : 0;
    by_pos[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  std::size_t start = 0;
  for (std::size_t end : group_end_) {
    double s = 0.0;
    for (std::size_t i = start; i < end; ++i) s += by_pos[i];
    const double v = s / static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) out[order_[i]] = v;
    start = end;
  }
  return out;
}

namespace {

void center(std::vector<double>& v) {
  const double m = mean(v);
  for (double& x : v) x -= m;
}

double second_moment(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

double mean_sq_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// Scales v to unit second moment; returns false when v vanishes.
bool normalize(std::vector<double>& v) {
  const double m2 = second_moment(v);
  if (!(m2 > 0.0)) return false;
  const double s = 1.0 / std::sqrt(m2);
  for (double& x : v) x *= s;
  return true;
}

}  // namespace

AceResult ace_mc(std::span<const double> x, std::span<const double> y, const AceConfig& cfg) {
  cfg.validate();
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  if (x.size() < 20) throw Error(ErrorCode::TooFewSamples, "ACE needs at least 20 samples");
  if (!has_spread(x) || !has_spread(y)) throw Error(ErrorCode::DegenerateInput, "constant column");

  const RankSmoother sx(x, cfg.smoother_span, cfg.smoother);
  const RankSmoother sy(y, cfg.smoother_span, cfg.smoother);

  AceResult res;
  // Standardized ranks of y, smoothed so the start lies in the response space.
  res.theta = sy.apply(average_ranks(y));
  center(res.theta);
  normalize(res.theta);

  res.phi = sx.apply(res.theta);
  double err = mean_sq_diff(res.theta, res.phi);
  res.error_trace.push_back(err);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    std::vector<double> theta = sy.apply(res.phi);
    center(theta);
    if (!normalize(theta)) break;  // phi carries no signal visible from y
    std::vector<double> phi = sx.apply(theta);
    const double next = mean_sq_diff(theta, phi);
    res.theta = std::move(theta);
    res.phi = std::move(phi);
    res.error_trace.push_back(next);
    res.iterations = it;
    const bool small_step = err - next < cfg.tol;
    err = next;
    if (small_step) {
      res.converged = true;
      break;
    }
  }
  res.rho_hat = std::clamp(pearson(res.theta, res.phi), 0.0, 1.0);
  return res;
}

}  // namespace mcsis
