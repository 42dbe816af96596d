#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace mcsis {

enum class KnotPlacement { Quantile, Uniform };

// Degree and knot count of a spline space. num_knots counts subintervals of
// [lo, hi], so there are num_knots - 1 interior knots and dim() = k + degree.
struct SplineSpec {
  int degree = 1;
  int num_knots = 3;
  KnotPlacement placement = KnotPlacement::Quantile;

  int dim() const { return num_knots + degree; }
  void validate() const;

  friend bool operator==(const SplineSpec&, const SplineSpec&) = default;
};

// Normalized B-spline basis on a clamped knot vector. Immutable once built.
class SplineBasis {
 public:
  // Throws InvalidArgument unless lo < hi and the interior knots are strictly
  // increasing inside (lo, hi) with exactly num_knots - 1 entries.
  SplineBasis(SplineSpec spec, double lo, double hi, std::vector<double> interior_knots,
              bool uniform_fallback = false);

  const SplineSpec& spec() const { return spec_; }
  int degree() const { return spec_.degree; }
  int dim() const { return spec_.dim(); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::span<const double> interior_knots() const { return interior_; }
  // Boundary knots repeated degree + 1 times around the interior knots.
  std::span<const double> knot_vector() const { return knots_; }

  // Set when tied quantiles forced uniform interior knots.
  bool uniform_fallback() const { return uniform_fallback_; }

  // Fills the degree + 1 possibly nonzero basis values at x (clamped to the
  // boundary) and returns the index of the first one.
  int evaluate_local(double x, std::span<double> out) const;

  Eigen::VectorXd evaluate(double x) const;

  // Row u holds evaluate(values[u]).
  Eigen::MatrixXd design_matrix(std::span<const double> values) const;

 private:
  int find_span(double x) const;

  SplineSpec spec_;
  double lo_;
  double hi_;
  std::vector<double> interior_;
  std::vector<double> knots_;
  bool uniform_fallback_;
};

// Basis on [min(values), max(values)] with interior knots at the sample
// quantiles i/k (type-7) or equally spaced. Tied quantiles fall back to
// uniform placement.
//
// Throws DegenerateInput for a constant sample, TooFewSamples when
// values.size() < dim + 1.
SplineBasis build_basis(std::span<const double> values, const SplineSpec& spec);

}  // namespace mcsis
