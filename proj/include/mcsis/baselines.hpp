#pragma once

#include <span>
#include <string>
#include <vector>

#include "mcsis/bspline.hpp"

namespace mcsis {

enum class ScoreKind { Sis, Nis, DcSis, McAce, McSpline };

const char* to_string(ScoreKind kind);
ScoreKind parse_score_kind(const std::string& name);

// |Pearson correlation|. Throws DegenerateInput for a constant column.
double sis_score(std::span<const double> x, std::span<const double> y);

// Cubic rule of thumb d_n = floor(n^(1/5)) + 2, i.e. k = d_n - 3 (at least 1).
SplineSpec nis_default_spec(std::size_t n);

// Empirical second moment of the centered least-squares fit of y on the
// spline basis of x.
double nis_score(std::span<const double> x, std::span<const double> y, const SplineSpec& spec, double ridge = 1e-8);

// Biased (V-statistic) distance correlation in [0, 1].
double dcor_score(std::span<const double> x, std::span<const double> y);

// Response half of the distance correlation: double-centered distance matrix
// of y kept once and reused across predictors.
class DcorResponse {
 public:
  explicit DcorResponse(std::span<const double> y);

  double score(std::span<const double> x) const;
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::vector<double> centered_;  // n x n row-major
  double dvar_y_ = 0.0;           // n^-2 sum B_kl^2
};

}  // namespace mcsis
