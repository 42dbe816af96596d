#pragma once

#include <optional>
#include <span>

#include <Eigen/Dense>

#include "mcsis/bspline.hpp"

namespace mcsis {

// d_n - 1 orthonormal contrasts of length d_n, each orthogonal to the ones
// vector. Rows are the contrast vectors.
struct ContrastSet {
  Eigen::MatrixXd rows;
};

// Helmert contrasts: row i (0-based) is 1/sqrt((i+1)(i+2)) on the first i+1
// entries and -(i+1)/sqrt((i+1)(i+2)) at entry i+1.
ContrastSet contrast_set(int dim);

struct McOptions {
  // Relative eigenvalue floor for Gram inversions: eigenvalues below
  // ridge * trace / dim are lifted to that value.
  double ridge = 1e-8;
  // Divide the centering matrix by the knot count (cancels in lambda_hat).
  bool knot_scaling = true;
  // Replaces the Helmert contrasts; rows must be orthonormal and sum to zero.
  std::optional<Eigen::MatrixXd> contrasts;
};

// Regularized symmetric inverse and inverse square root.
struct SymInverse {
  Eigen::MatrixXd inverse;
  Eigen::MatrixXd inverse_sqrt;
  double condition = 0.0;  // max eigenvalue / min eigenvalue before flooring
  double floor = 0.0;
  int lifted = 0;          // eigenvalues raised to the floor
};

// Throws SingularGram when the matrix has no positive spectrum or is singular
// with ridge == 0.
SymInverse regularized_inverse(const Eigen::MatrixXd& gram, double ridge);

// Response-side quantities shared by every predictor paired with the same y:
// basis, design matrix, Gram matrix and its regularized inverse square root.
struct ResponseModel {
  SplineBasis basis;
  Eigen::MatrixXd design;   // n x d_y
  Eigen::MatrixXd gram;     // A_00
  SymInverse gram_inv;

  std::size_t size() const { return static_cast<std::size_t>(design.rows()); }
};

ResponseModel prepare_response(std::span<const double> y, const SplineSpec& spec_y, double ridge = 1e-8);

struct McDiagnostics {
  double raw_lambda = 0.0;
  double cond_a00 = 0.0;
  double cond_axx = 0.0;
  double floor_a00 = 0.0;
  double floor_axx = 0.0;
  int lifted_a00 = 0;
  int lifted_axx = 0;
  // Some basis function had zero empirical mean on x; psi was re-centered.
  bool zero_basis_mean = false;
};

struct McEstimate {
  double lambda_hat = 0.0;  // max(raw top eigenvalue, 0)
  double rho_hat = 0.0;     // sqrt(clamp(lambda_hat, 0, 1))
  Eigen::VectorXd alpha_hat;  // response coefficients, length d_y
  Eigen::VectorXd eta_hat;    // predictor coefficients, length d_x - 1
  SplineBasis basis_y;
  SplineBasis basis_x;
  Eigen::MatrixXd psi_map;    // (d_x - 1) x d_x: psi(x) = psi_map * B(x) - psi_offset
  Eigen::VectorXd psi_offset; // zero unless a basis column had zero mean
  McDiagnostics diagnostics;
};

// Squared maximum correlation between x and y in the spline spaces given by
// the two specs, with the fitted transformations.
//
// Throws TooFewSamples unless n >= max(d_x, d_y) + 2, DegenerateInput for a
// constant sample, SingularGram when a Gram matrix cannot be inverted.
McEstimate estimate_mc(std::span<const double> x, std::span<const double> y, const SplineSpec& spec_x,
                       const SplineSpec& spec_y, const McOptions& options = {});

McEstimate estimate_mc(const ResponseModel& response, std::span<const double> x, const SplineSpec& spec_x,
                       const McOptions& options = {});

// theta(y) = alpha' B_y(y)
double transform_y(const McEstimate& est, double y);
// phi(x) = eta' psi(x)
double transform_x(const McEstimate& est, double x);

}  // namespace mcsis
