#include "doctest.h"

#include <cmath>
#include <iomanip>
#include <vector>

#include "mcsis/error.hpp"
#include "mcsis/maxcorr.hpp"
#include "mcsis/rng.hpp"
#include "mcsis/stats.hpp"
#include "oracles.hpp"

using namespace mcsis;

namespace {

struct Pair {
  std::vector<double> x, y;
};

Pair gaussian_pair(std::size_t n, double rho, std::uint64_t seed) {
  Rng rng(seed);
  Pair p;
  for (std::size_t u = 0; u < n; ++u) {
    const double a = rng.normal(), b = rng.normal();
    p.x.push_back(a);
    p.y.push_back(rho * a + std::sqrt(1 - rho * rho) * b);
  }
  return p;
}

Pair nonlinear_pair(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Pair p;
  for (std::size_t u = 0; u < n; ++u) {
    const double a = rng.normal();
    p.x.push_back(a);
    p.y.push_back(std::sin(2 * a) + 0.5 * a * a + 0.4 * rng.normal());
  }
  return p;
}

oracle::Matrix rows_of(const SplineBasis& b, const std::vector<double>& v) {
  oracle::Matrix m;
  for (double x : v) {
    const Eigen::VectorXd e = b.evaluate(x);
    m.emplace_back(e.data(), e.data() + e.size());
  }
  return m;
}

}  // namespace

TEST_CASE("Helmert contrasts") {
  const Eigen::MatrixXd z2 = contrast_set(2).rows;
  REQUIRE(z2.rows() == 1);
  CHECK(z2(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(z2(0, 1) == doctest::Approx(-1 / std::sqrt(2.0)));
  const Eigen::MatrixXd z3 = contrast_set(3).rows;
  REQUIRE(z3.rows() == 2);
  CHECK(z3(0, 0) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(z3(0, 1) == doctest::Approx(-1 / std::sqrt(2.0)));
  CHECK(z3(0, 2) == 0.0);
  CHECK(z3(1, 0) == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(z3(1, 1) == doctest::Approx(1 / std::sqrt(6.0)));
  CHECK(z3(1, 2) == doctest::Approx(-2 / std::sqrt(6.0)));
  for (int d = 2; d <= 12; ++d) {
    const Eigen::MatrixXd z = contrast_set(d).rows;
    CHECK(z.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((z * z.transpose() - Eigen::MatrixXd::Identity(d - 1, d - 1)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("identical samples give lambda one") {
  const Pair p = gaussian_pair(300, 0.0, 3);
  const McEstimate e = estimate_mc(p.x, p.x, SplineSpec{2, 4}, SplineSpec{2, 4});
  CHECK(std::abs(e.lambda_hat - 1.0) < 1e-8);
  CHECK(std::abs(e.rho_hat - 1.0) < 1e-8);
}

TEST_CASE("lambda matches the canonical-correlation oracle") {
  for (int degree = 1; degree <= 3; ++degree) {
    for (int k = 1; k + degree <= 8; k += 2) {
      for (std::uint64_t seed : {11u, 12u}) {
        const Pair p = seed == 11 ? nonlinear_pair(400, seed + degree * 7 + k) : gaussian_pair(400, 0.4, seed + k);
        const SplineSpec spec{degree, k};
        const McEstimate e = estimate_mc(p.x, p.y, spec, spec);
        REQUIRE(e.diagnostics.lifted_a00 == 0);
        REQUIRE(e.diagnostics.lifted_axx == 0);
        const double ref = oracle::top_canonical_sq(rows_of(e.basis_y, p.y), rows_of(e.basis_x, p.x));
        CHECK(std::abs(e.lambda_hat - ref) < 1e-10);
        CHECK(e.diagnostics.raw_lambda >= -1e-10);
      }
    }
  }
  // unequal specs on the two sides
  const Pair p = nonlinear_pair(500, 77);
  const McEstimate e = estimate_mc(p.x, p.y, SplineSpec{3, 5}, SplineSpec{1, 2});
  const double ref = oracle::top_canonical_sq(rows_of(e.basis_y, p.y), rows_of(e.basis_x, p.x));
  CHECK(std::abs(e.lambda_hat - ref) < 1e-10);
}

TEST_CASE("affine invariance") {
  const Pair p = nonlinear_pair(500, 21);
  const SplineSpec spec{2, 4};
  const double base = estimate_mc(p.x, p.y, spec, spec).lambda_hat;
  std::vector<double> x2, y2;
  for (double v : p.x) x2.push_back(3.5 * v - 2.0);
  for (double v : p.y) y2.push_back(0.25 * v + 10.0);
  CHECK(std::abs(estimate_mc(x2, p.y, spec, spec).lambda_hat - base) < 1e-10);
  CHECK(std::abs(estimate_mc(p.x, y2, spec, spec).lambda_hat - base) < 1e-10);
  CHECK(std::abs(estimate_mc(x2, y2, spec, spec).lambda_hat - base) < 1e-10);
}

TEST_CASE("centering scale and contrast choice cancel") {
  const Pair p = nonlinear_pair(400, 31);
  const SplineSpec spec{2, 5};
  const McEstimate base = estimate_mc(p.x, p.y, spec, spec);
  McOptions unscaled;
  unscaled.knot_scaling = false;
  CHECK(std::abs(estimate_mc(p.x, p.y, spec, spec, unscaled).lambda_hat - base.lambda_hat) < 1e-10);

  // rotate the Helmert rows by a random orthogonal matrix
  const int d = spec.dim();
  Rng rng(4);
  Eigen::MatrixXd g(d - 1, d - 1);
  for (int i = 0; i < d - 1; ++i)
    for (int j = 0; j < d - 1; ++j) g(i, j) = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  McOptions rotated;
  rotated.contrasts = q * contrast_set(d).rows;
  CHECK(std::abs(estimate_mc(p.x, p.y, spec, spec, rotated).lambda_hat - base.lambda_hat) < 1e-10);
}

TEST_CASE("fitted transformations") {
  const Pair p = nonlinear_pair(600, 41);
  const McEstimate e = estimate_mc(p.x, p.y, SplineSpec{2, 4}, SplineSpec{2, 4});
  std::vector<double> theta, phi;
  for (std::size_t u = 0; u < p.x.size(); ++u) {
    theta.push_back(transform_y(e, p.y[u]));
    phi.push_back(transform_x(e, p.x[u]));
  }
  double t2 = 0.0;
  for (double t : theta) t2 += t * t;
  t2 /= theta.size();
  CHECK(std::abs(mean(phi)) < 1e-8);
  CHECK(std::abs(t2 - 1.0) < 1e-8);
  CHECK(std::abs(pearson(theta, phi) - std::sqrt(e.lambda_hat)) < 1e-6);

  // 1 - lambda is the minimum squared error, attained by the fitted pair.
  double err = 0.0;
  for (std::size_t u = 0; u < theta.size(); ++u) err += (theta[u] - phi[u]) * (theta[u] - phi[u]);
  err /= theta.size();
  CHECK(std::abs((1.0 - e.lambda_hat) - err) < 1e-8);
}

TEST_CASE("squared-error identity across seeds and specs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Pair p = seed % 2 ? nonlinear_pair(300, 500 + seed) : gaussian_pair(300, 0.3, 500 + seed);
    const SplineSpec sx{1 + int(seed % 3), 3 + int(seed % 4)};
    const SplineSpec sy{1 + int((seed + 1) % 3), 2 + int(seed % 3)};
    const McEstimate e = estimate_mc(p.x, p.y, sx, sy);
    double err = 0.0, t2 = 0.0;
    for (std::size_t u = 0; u < p.x.size(); ++u) {
      const double t = transform_y(e, p.y[u]), f = transform_x(e, p.x[u]);
      err += (t - f) * (t - f);
      t2 += t * t;
    }
    err /= p.x.size();
    t2 /= p.x.size();
    CHECK(std::abs(t2 - 1.0) < 1e-8);
    CHECK(std::abs((1.0 - e.lambda_hat) - err) < 1e-8);
  }
}

TEST_CASE("any other unit-norm response transform has larger error") {
  const Pair p = nonlinear_pair(400, 51);
  const SplineSpec spec{2, 3};
  const McEstimate e = estimate_mc(p.x, p.y, spec, spec);
  const Eigen::MatrixXd by = e.basis_y.design_matrix(p.y);
  const Eigen::MatrixXd bx = e.basis_x.design_matrix(p.x);
  // centered predictor space
  const Eigen::MatrixXd cx = bx.rowwise() - bx.colwise().mean();
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd a(by.cols());
    for (int i = 0; i < a.size(); ++i) a(i) = rng.normal();
    Eigen::VectorXd theta = by * a;
    theta /= std::sqrt(theta.squaredNorm() / theta.size());
    const Eigen::VectorXd fit = cx * cx.completeOrthogonalDecomposition().solve(theta);
    const double err = (theta - fit).squaredNorm() / theta.size();
    CHECK(err >= 1.0 - e.lambda_hat - 1e-10);
  }
}

TEST_CASE("richer spline space does not lower lambda on y = x^2") {
  Rng rng(61);
  std::vector<double> x, y;
  for (int u = 0; u < 500; ++u) {
    x.push_back(rng.normal());
    y.push_back(x.back() * x.back());
  }
  const double rich = estimate_mc(x, y, SplineSpec{2, 4}, SplineSpec{2, 4}).lambda_hat;
  const double poor = estimate_mc(x, y, SplineSpec{1, 1}, SplineSpec{1, 1}).lambda_hat;
  CHECK(rich >= poor - 1e-10);
  CHECK(rich > 0.9);
}

TEST_CASE("argument order matters little on Gaussian pairs") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Pair p = gaussian_pair(2000, 0.5, 900 + seed);
    const SplineSpec spec{2, 4};
    const double xy = estimate_mc(p.x, p.y, spec, spec).lambda_hat;
    const double yx = estimate_mc(p.y, p.x, spec, spec).lambda_hat;
    CHECK(std::abs(xy - yx) < 0.02);
  }
}

TEST_CASE("shared response model gives the same estimate") {
  const Pair p = nonlinear_pair(300, 71);
  const SplineSpec spec{2, 4};
  const ResponseModel rm = prepare_response(p.y, spec);
  const McEstimate a = estimate_mc(p.x, p.y, spec, spec);
  const McEstimate b = estimate_mc(rm, p.x, spec);
  CHECK(a.lambda_hat == b.lambda_hat);
}

TEST_CASE("Gaussian pair with correlation 0.5") {
  double sum = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const Pair p = gaussian_pair(2000, 0.5, 1300 + s);
    const double r = estimate_mc(p.x, p.y, SplineSpec{2, 4}, SplineSpec{2, 4}).rho_hat;
    CHECK(std::abs(r - 0.5) < 0.07);
    sum += r;
  }
  CHECK(std::abs(sum / seeds - 0.5) < 0.07);
}

TEST_CASE("independent uniforms: null level of lambda") {
  // Reference level from a 200-seed run of this exact configuration.
  constexpr double kNullMean = 0.00347582053;
  constexpr double kNullSd = 0.001641334363;
  std::vector<double> values;
  for (int s = 0; s < 200; ++s) {
    Rng rng(70000 + s);
    std::vector<double> x(2000), y(2000);
    for (auto& v : x) v = rng.uniform();
    for (auto& v : y) v = rng.uniform();
    values.push_back(estimate_mc(x, y, SplineSpec{1, 3}, SplineSpec{1, 3}).lambda_hat);
  }
  const double m = mean(values);
  const double sd = std::sqrt(variance(values));
  MESSAGE(std::setprecision(10) << "null lambda mean " << m << " sd " << sd);
  CHECK(m < 0.02);
  CHECK(m == doctest::Approx(kNullMean).epsilon(1e-6));
  CHECK(sd == doctest::Approx(kNullSd).epsilon(1e-6));
}

TEST_CASE("input errors") {
  const Pair p = gaussian_pair(50, 0.3, 81);
  const std::vector<double> constant(50, 1.0);
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  CHECK(code_of([&] { estimate_mc(constant, p.y, SplineSpec{}, SplineSpec{}); }) == ErrorCode::DegenerateInput);
  CHECK(code_of([&] { estimate_mc(p.x, constant, SplineSpec{}, SplineSpec{}); }) == ErrorCode::DegenerateInput);
  const std::vector<double> short_x(p.x.begin(), p.x.begin() + 8);
  const std::vector<double> short_y(p.y.begin(), p.y.begin() + 8);
  CHECK(code_of([&] { estimate_mc(short_x, short_y, SplineSpec{3, 4}, SplineSpec{1, 1}); }) ==
        ErrorCode::TooFewSamples);
  CHECK(code_of([&] { estimate_mc(short_x, p.y, SplineSpec{}, SplineSpec{}); }) == ErrorCode::InvalidDims);
}

TEST_CASE("regularized inverse") {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
  g(0, 0) = 4.0;
  g(1, 1) = 1.0;
  CHECK_THROWS_AS(regularized_inverse(g, 0.0), Error);
  const SymInverse inv = regularized_inverse(g, 1e-8);
  CHECK(inv.lifted == 1);
  CHECK(inv.floor == doctest::Approx(1e-8 * 5.0 / 3.0));
  CHECK(inv.inverse(0, 0) == doctest::Approx(0.25));
  CHECK(inv.inverse_sqrt(1, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(regularized_inverse(Eigen::MatrixXd::Zero(2, 2), 1e-8), Error);
}
