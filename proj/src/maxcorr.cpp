#include "mcsis/maxcorr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mcsis/error.hpp"
#include "mcsis/stats.hpp"

namespace mcsis {

ContrastSet contrast_set(int dim) {
  if (dim < 2) throw Error(ErrorCode::InvalidArgument, "contrast set needs dim >= 2");
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(dim - 1, dim);
  for (int i = 0; i < dim - 1; ++i) {
    const double m = static_cast<double>(i + 1);
    const double scale = 1.0 / std::sqrt(m * (m + 1.0));
    for (int j = 0; j <= i; ++j) rows(i, j) = scale;
    rows(i, i + 1) = -m * scale;
  }
  return {std::move(rows)};
}

SymInverse regularized_inverse(const Eigen::MatrixXd& gram, double ridge) {
  if (ridge < 0.0) throw Error(ErrorCode::InvalidArgument, "ridge must be >= 0");
  if (!gram.allFinite()) throw Error(ErrorCode::SingularGram, "Gram matrix has non-finite entries");
  const Eigen::Index d = gram.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::SingularGram, "eigendecomposition failed");

  const Eigen::VectorXd& values = eig.eigenvalues();
  const double top = values[d - 1];
  if (!(top > 0.0)) throw Error(ErrorCode::SingularGram, "Gram matrix has no positive eigenvalue");

  SymInverse out;
  out.floor = ridge * gram.trace() / static_cast<double>(d);
  out.condition = values[0] > 0.0 ? top / values[0] : std::numeric_limits<double>::infinity();
  if (ridge == 0.0 && values[0] <= 1e-14 * top)
    throw Error(ErrorCode::SingularGram, "Gram matrix is numerically singular and no ridge was given");

  Eigen::VectorXd inv(d);
  Eigen::VectorXd inv_sqrt(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double v = values[i];
    if (v < out.floor) {
      v = out.floor;
      ++out.lifted;
    }
    inv[i] = 1.0 / v;
    inv_sqrt[i] = 1.0 / std::sqrt(v);
  }
  const Eigen::MatrixXd& vecs = eig.eigenvectors();
  out.inverse = vecs * inv.asDiagonal() * vecs.transpose();
  out.inverse_sqrt = vecs * inv_sqrt.asDiagonal() * vecs.transpose();
  return out;
}

ResponseModel prepare_response(std::span<const double> y, const SplineSpec& spec_y, double ridge) {
  SplineBasis basis = build_basis(y, spec_y);
  Eigen::MatrixXd design = basis.design_matrix(y);
  const double n = static_cast<double>(y.size());
  Eigen::MatrixXd gram = (design.transpose() * design) / n;
  SymInverse inv = regularized_inverse(gram, ridge);
  return ResponseModel{std::move(basis), std::move(design), std::move(gram), std::move(inv)};
}

McEstimate estimate_mc(std::span<const double> x, std::span<const double> y, const SplineSpec& spec_x,
                       const SplineSpec& spec_y, const McOptions& options) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  const int need = std::max(spec_x.dim(), spec_y.dim()) + 2;
  if (static_cast<int>(x.size()) < need)
    throw Error(ErrorCode::TooFewSamples, "need at least " + std::to_string(need) + " samples");
  return estimate_mc(prepare_response(y, spec_y, options.ridge), x, spec_x, options);
}

McEstimate estimate_mc(const ResponseModel& response, std::span<const double> x, const SplineSpec& spec_x,
                       const McOptions& options) {
  const std::size_t n_size = response.size();
  if (x.size() != n_size) throw Error(ErrorCode::InvalidDims, "x and y lengths differ");
  const int need = std::max(spec_x.dim(), response.basis.dim()) + 2;
  if (static_cast<int>(n_size) < need)
    throw Error(ErrorCode::TooFewSamples, "need at least " + std::to_string(need) + " samples");

  SplineBasis basis_x = build_basis(x, spec_x);
  const Eigen::MatrixXd bx = basis_x.design_matrix(x);
  const double n = static_cast<double>(n_size);
  const int dx = basis_x.dim();

  McDiagnostics diag;
  diag.cond_a00 = response.gram_inv.condition;
  diag.floor_a00 = response.gram_inv.floor;
  diag.lifted_a00 = response.gram_inv.lifted;

  // psi(x) = D B(x) with D_sm = z_sm / (k b_m).
  Eigen::MatrixXd z;
  if (options.contrasts) {
    z = *options.contrasts;
    if (z.rows() != dx - 1 || z.cols() != dx)
      throw Error(ErrorCode::InvalidArgument, "custom contrasts have the wrong shape");
  } else {
    z = contrast_set(dx).rows;
  }
  const Eigen::RowVectorXd b_mean = bx.colwise().mean();
  const double k_scale = options.knot_scaling ? static_cast<double>(spec_x.num_knots) : 1.0;
  Eigen::MatrixXd psi_map(dx - 1, dx);
  for (int m = 0; m < dx; ++m) {
    double bm = b_mean[m];
    if (!(bm > 0.0)) {
      diag.zero_basis_mean = true;
      bm = 1.0;  // column is identically zero on the sample; its scaling is irrelevant
    }
    psi_map.col(m) = z.col(m) / (k_scale * bm);
  }

  Eigen::VectorXd psi_offset = Eigen::VectorXd::Zero(dx - 1);
  Eigen::MatrixXd gxx = (bx.transpose() * bx) / n;
  Eigen::MatrixXd gx0 = (bx.transpose() * response.design) / n;
  if (diag.zero_basis_mean) {
    // Centering through D no longer holds exactly; subtract the mean of psi.
    const Eigen::VectorXd by_mean = response.design.colwise().mean().transpose();
    const Eigen::VectorXd bxm = b_mean.transpose();
    gxx -= bxm * bxm.transpose();
    gx0 -= bxm * by_mean.transpose();
    psi_offset = psi_map * bxm;
  }
  Eigen::MatrixXd axx = psi_map * gxx * psi_map.transpose();
  axx = 0.5 * (axx + axx.transpose());
  const Eigen::MatrixXd ax0 = psi_map * gx0;

  const SymInverse axx_inv = regularized_inverse(axx, options.ridge);
  diag.cond_axx = axx_inv.condition;
  diag.floor_axx = axx_inv.floor;
  diag.lifted_axx = axx_inv.lifted;

  const Eigen::MatrixXd& s = response.gram_inv.inverse_sqrt;
  const Eigen::MatrixXd t = ax0 * s;
  Eigen::MatrixXd m = t.transpose() * axx_inv.inverse * t;
  m = 0.5 * (m + m.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::SingularGram, "eigendecomposition of M failed");
  const Eigen::Index top = m.rows() - 1;
  const double raw = eig.eigenvalues()[top];
  diag.raw_lambda = raw;

  Eigen::VectorXd alpha = s * eig.eigenvectors().col(top);
  // Orient theta to increase with y on average.
  const Eigen::VectorXd ramp = Eigen::VectorXd::LinSpaced(alpha.size(), 1.0, static_cast<double>(alpha.size()));
  if (alpha.dot(ramp) < 0.0) alpha = -alpha;
  Eigen::VectorXd eta = axx_inv.inverse * ax0 * alpha;

  McEstimate est{std::max(raw, 0.0),
                 std::sqrt(std::clamp(raw, 0.0, 1.0)),
                 std::move(alpha),
                 std::move(eta),
                 response.basis,
                 std::move(basis_x),
                 std::move(psi_map),
                 std::move(psi_offset),
                 diag};
  return est;
}

double transform_y(const McEstimate& est, double y) { return est.alpha_hat.dot(est.basis_y.evaluate(y)); }

double transform_x(const McEstimate& est, double x) {
  return est.eta_hat.dot(est.psi_map * est.basis_x.evaluate(x) - est.psi_offset);
}

}  // namespace mcsis
