#include "mcsis/bspline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mcsis/error.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

namespace {

constexpr int kMaxDegree = 3;

std::vector<double> uniform_interior(double lo, double hi, int k) {
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(k > 0 ? k - 1 : 0));
  for (int i = 1; i < k; ++i) knots.push_back(lo + (hi - lo) * static_cast<double>(i) / k);
  return knots;
}

}  // namespace

void SplineSpec::validate() const {
  if (degree < 1 || degree > kMaxDegree)
    throw Error(ErrorCode::InvalidArgument, "spline degree must be 1, 2 or 3, got " + std::to_string(degree));
  if (num_knots < 1)
    throw Error(ErrorCode::InvalidArgument, "number of knots must be >= 1, got " + std::to_string(num_knots));
}

SplineBasis::SplineBasis(SplineSpec spec, double lo, double hi, std::vector<double> interior_knots,
                         bool uniform_fallback)
    : spec_(spec), lo_(lo), hi_(hi), interior_(std::move(interior_knots)), uniform_fallback_(uniform_fallback) {
  spec_.validate();
  if (!(lo_ < hi_) || !std::isfinite(lo_) || !std::isfinite(hi_))
    throw Error(ErrorCode::InvalidArgument, "spline boundary requires finite lo < hi");
  if (static_cast<int>(interior_.size()) != spec_.num_knots - 1)
    throw Error(ErrorCode::InvalidArgument, "expected num_knots - 1 interior knots");
  double prev = lo_;
  for (double t : interior_) {
    if (!(t > prev)) throw Error(ErrorCode::InvalidArgument, "interior knots must be strictly increasing inside (lo, hi)");
    prev = t;
  }
  if (!(hi_ > prev)) throw Error(ErrorCode::InvalidArgument, "interior knots must lie below hi");

  const int p = spec_.degree;
  knots_.reserve(interior_.size() + 2 * static_cast<std::size_t>(p + 1));
  knots_.insert(knots_.end(), static_cast<std::size_t>(p + 1), lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), static_cast<std::size_t>(p + 1), hi_);
}

int SplineBasis::find_span(double x) const {
  // Knot span index i with knots_[i] <= x < knots_[i+1], in [degree, dim-1].
  const auto it = std::upper_bound(interior_.begin(), interior_.end(), x);
  return spec_.degree + static_cast<int>(it - interior_.begin());
}

int SplineBasis::evaluate_local(double x, std::span<double> out) const {
  const int p = spec_.degree;
  x = std::clamp(x, lo_, hi_);
  const int span = find_span(x);

  std::array<double, kMaxDegree + 1> left{};
  std::array<double, kMaxDegree + 1> right{};
  out[0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - knots_[span + 1 - j];
    right[j] = knots_[span + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = out[r] / (right[r + 1] + left[j - r]);
      out[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    out[j] = saved;
  }
  return span - p;
}

Eigen::VectorXd SplineBasis::evaluate(double x) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim());
  std::array<double, kMaxDegree + 1> local{};
  const int first = evaluate_local(x, local);
  for (int r = 0; r <= spec_.degree; ++r) v[first + r] = local[r];
  return v;
}

Eigen::MatrixXd SplineBasis::design_matrix(std::span<const double> values) const {
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, dim());
  std::array<double, kMaxDegree + 1> local{};
  for (Eigen::Index u = 0; u < n; ++u) {
    const int first = evaluate_local(values[static_cast<std::size_t>(u)], local);
    for (int r = 0; r <= spec_.degree; ++r) m(u, first + r) = local[r];
  }
  return m;
}

SplineBasis build_basis(std::span<const double> values, const SplineSpec& spec) {
  spec.validate();
  const int dim = spec.dim();
  if (static_cast<int>(values.size()) < dim + 1)
    throw Error(ErrorCode::TooFewSamples, "need at least " + std::to_string(dim + 1) + " samples for a basis of dimension " +
                                              std::to_string(dim));
  if (!all_finite(values)) throw Error(ErrorCode::InvalidArgument, "non-finite sample value");

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  const double hi = sorted.back();
  if (!(hi > lo)) throw Error(ErrorCode::DegenerateInput, "all sample values are equal");

  const int k = spec.num_knots;
  if (spec.placement == KnotPlacement::Uniform) return SplineBasis(spec, lo, hi, uniform_interior(lo, hi, k));

  std::vector<double> interior;
  interior.reserve(static_cast<std::size_t>(k - 1));
  for (int i = 1; i < k; ++i) {
    const double q = quantile_sorted(sorted, static_cast<double>(i) / k);
    if (q > lo && q < hi && (interior.empty() || q > interior.back())) interior.push_back(q);
  }
  if (static_cast<int>(interior.size()) < k - 1)
    return SplineBasis(spec, lo, hi, uniform_interior(lo, hi, k), /*uniform_fallback=*/true);
  return SplineBasis(spec, lo, hi, std::move(interior));
}

}  // namespace mcsis
