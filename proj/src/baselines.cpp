#include "mcsis/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "mcsis/error.hpp"
#include "mcsis/maxcorr.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

const char* to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::Sis: return "SIS";
    case ScoreKind::Nis: return "NIS";
    case ScoreKind::DcSis: return "DC-SIS";
    case ScoreKind::McAce: return "MC-SIS(ACE)";
    case ScoreKind::McSpline: return "MC-SIS(B-spline)";
  }
  return "?";
}

ScoreKind parse_score_kind(const std::string& name) {
  std::string s;
  for (char c : name)
    if (c != '-' && c != '_' && c != '(' && c != ')') s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "sis") return ScoreKind::Sis;
  if (s == "nis") return ScoreKind::Nis;
  if (s == "dcsis" || s == "dc" || s == "dcor") return ScoreKind::DcSis;
  if (s == "ace" || s == "mcace" || s == "mcsisace") return ScoreKind::McAce;
  if (s == "mc" || s == "mcspline" || s == "mcsis" || s == "mcsisbspline" || s == "bspline") return ScoreKind::McSpline;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + name + "'");
}

double sis_score(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  if (!has_spread(x) || !has_spread(y)) throw Error(ErrorCode::DegenerateInput, "constant column");
  return std::min(1.0, std::abs(pearson(x, y)));
}

SplineSpec nis_default_spec(std::size_t n) {
  const int dn = static_cast<int>(std::floor(std::pow(static_cast<double>(n), 0.2))) + 2;
  return SplineSpec{3, std::max(1, dn - 3), KnotPlacement::Quantile};
}

double nis_score(std::span<const double> x, std::span<const double> y, const SplineSpec& spec, double ridge) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  if (static_cast<int>(x.size()) < spec.dim() + 2) throw Error(ErrorCode::TooFewSamples, "NIS needs n >= d_n + 2");
  const SplineBasis basis = build_basis(x, spec);
  const Eigen::MatrixXd b = basis.design_matrix(x);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const double n = static_cast<double>(x.size());
  const Eigen::MatrixXd gram = (b.transpose() * b) / n;
  const SymInverse inv = regularized_inverse(gram, ridge);
  const Eigen::VectorXd coef = inv.inverse * (b.transpose() * yv / n);
  Eigen::VectorXd fit = b * coef;
  fit.array() -= fit.mean();
  return fit.squaredNorm() / n;
}

namespace {

// Row means of |x_k - x_l| via sorted prefix sums.
std::vector<double> distance_row_means(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  double total = 0.0;
  for (double v : x) total += v;
  std::vector<double> means(n);
  double below = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = x[order[r]];
    const double rd = static_cast<double>(r);
    const double above = total - below - v;
    const double nabove = static_cast<double>(n - r - 1);
    means[order[r]] = (v * rd - below + above - v * nabove) / static_cast<double>(n);
    below += v;
  }
  return means;
}

}  // namespace

DcorResponse::DcorResponse(std::span<const double> y) : n_(y.size()) {
  if (n_ < 4) throw Error(ErrorCode::TooFewSamples, "distance correlation needs n >= 4");
  if (!has_spread(y)) throw Error(ErrorCode::DegenerateInput, "constant response");
  const std::vector<double> row = distance_row_means(y);
  const double grand = mean(row);
  centered_.resize(n_ * n_);
  double ss = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    for (std::size_t l = 0; l < n_; ++l) {
      const double v = std::abs(y[k] - y[l]) - row[k] - row[l] + grand;
      centered_[k * n_ + l] = v;
      ss += v * v;
    }
  }
  dvar_y_ = ss / static_cast<double>(n_ * n_);
}

double DcorResponse::score(std::span<const double> x) const {
  if (x.size() != n_) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  if (!has_spread(x)) throw Error(ErrorCode::DegenerateInput, "constant column");
  const double n = static_cast<double>(n_);

  // B is double centered, so sum A_kl B_kl = sum a_kl B_kl with raw distances.
  double cross = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    const double xk = x[k];
    const double* brow = &centered_[k * n_];
    for (std::size_t l = 0; l < n_; ++l) cross += std::abs(xk - x[l]) * brow[l];
  }
  const double dcov2 = cross / (n * n);

  // sum A_kl^2 = sum a_kl^2 - 2n sum abar_k^2 + n^2 abar^2
  const std::vector<double> row = distance_row_means(x);
  const double grand = mean(row);
  double sx = 0.0, sxx = 0.0, srow2 = 0.0;
  for (std::size_t k = 0; k < n_; ++k) {
    sx += x[k];
    sxx += x[k] * x[k];
    srow2 += row[k] * row[k];
  }
  const double sum_a2 = 2.0 * n * sxx - 2.0 * sx * sx;
  const double dvar_x = (sum_a2 - 2.0 * n * srow2 + n * n * grand * grand) / (n * n);

  const double denom = std::sqrt(dvar_x * dvar_y_);
  if (!(denom > 0.0)) return 0.0;
  const double r2 = std::clamp(dcov2 / denom, 0.0, 1.0);
  return std::sqrt(r2);
}

double dcor_score(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  if (!has_spread(x)) throw Error(ErrorCode::DegenerateInput, "constant column");
  return DcorResponse(y).score(x);
}

}  // namespace mcsis
