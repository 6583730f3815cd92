#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "priorreg/linear.hpp"
#include "priorreg/rng.hpp"

using namespace priorreg;

namespace {

Matrix random_matrix(Rng& rng, int n, int m) {
  Matrix X(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) X(i, j) = rng.normal();
  }
  return X;
}

Vector random_vector(Rng& rng, int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.normal();
  return v;
}

// Independent pseudoinverse route through a full SVD, used as the oracle
// for minimum-norm solutions.
Vector pinv_solve(const Matrix& X, const Vector& y) {
  Eigen::JacobiSVD<Matrix> svd(X, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  double cutoff = 1e-10 * s(0);
  Vector z = svd.matrixU().transpose() * y;
  Vector t = Vector::Zero(X.cols());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) t(i) = z(i) / s(i);
  }
  return svd.matrixV() * t;
}

}  // namespace

TEST_CASE("solve_ols single column", "[linear]") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(2);
  y << 1, 2;
  Vector w = solve_ols(X, y);
  REQUIRE(w.size() == 1);
  REQUIRE(w(0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("solve_ols identity design returns the response", "[linear]") {
  Matrix X = Matrix::Identity(3, 3);
  Vector y(3);
  y << -0.3, 2.5, 7.0;
  Vector w = solve_ols(X, y);
  REQUIRE((w - y).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("solve_ols rank-deficient design is minimum-norm", "[linear]") {
  Matrix X(2, 2);
  X << 1, 1, 1, 1;
  Vector y(2);
  y << 2, 2;
  Vector w = solve_ols(X, y);
  REQUIRE(w(0) == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(w(1) == Catch::Approx(1.0).margin(1e-12));

  Rng rng(91);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix A = random_matrix(rng, 8, 5);
    A.col(4) = A.col(0) + A.col(1);  // force rank deficiency
    Vector b = random_vector(rng, 8);
    Vector got = solve_ols(A, b);
    Vector want = pinv_solve(A, b);
    REQUIRE((got - want).lpNorm<Eigen::Infinity>() < 1e-8);
  }
}

TEST_CASE("solve_ols input validation", "[linear]") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(3);
  y << 1, 2, 3;
  REQUIRE_THROWS_AS(solve_ols(X, y), contract_error);

  Vector y2(2);
  y2 << 1, std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(solve_ols(X, y2), input_error);
}

TEST_CASE("ridge at theta zero equals OLS", "[linear]") {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 5 + static_cast<int>(rng.below(20));
    int m = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    Matrix X = random_matrix(rng, n, m);
    Vector y = random_vector(rng, n);
    RidgeProblem p{X, y, random_vector(rng, m), 0.0};
    Vector w_ridge = solve_ridge_with_prior(p);
    Vector w_ols = solve_ols(X, y);
    REQUIRE((w_ridge - w_ols).lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

TEST_CASE("ridge rejects negative penalties", "[linear]") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(2);
  y << 1, 2;
  REQUIRE_THROWS_AS(solve_ridge_with_prior({X, y, Vector::Zero(1), -1.0}),
                    contract_error);
}

TEST_CASE("ridge agreeing fit and prior", "[linear]") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(2);
  y << 1, 2;
  Vector prior(1);
  prior << 1;
  RidgeProblem p{X, y, prior, 5.0};
  Vector w = solve_ridge_with_prior(p);
  REQUIRE(w(0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("ridge huge theta collapses to the prior", "[linear]") {
  Matrix X(2, 1);
  X << 1, 2;
  Vector y(2);
  y << 1, 2;
  RidgeProblem p{X, y, Vector::Zero(1), 1e12};
  Vector w = solve_ridge_with_prior(p);
  REQUIRE(w.norm() <= 1e-5);

  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix A = random_matrix(rng, 12, 4);
    Vector b = random_vector(rng, 12);
    Vector prior = random_vector(rng, 4);
    RidgeProblem q{A, b, prior, 1e12};
    Vector got = solve_ridge_with_prior(q);
    REQUIRE((got - prior).norm() <= 1e-5 * (1.0 + prior.norm()));
  }
}

TEST_CASE("ridge gradient vanishes at the solution", "[linear]") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 6 + static_cast<int>(rng.below(30));
    int m = 1 + static_cast<int>(rng.below(6));
    Matrix X = random_matrix(rng, n, m);
    Vector y = random_vector(rng, n);
    Vector prior = random_vector(rng, m);
    double theta = std::exp(rng.normal(0.0, 2.0));
    RidgeProblem p{X, y, prior, theta};
    Vector w = solve_ridge_with_prior(p);
    Vector grad =
        2.0 * (X.transpose() * (X * w - y)) + 2.0 * theta * (w - prior);
    REQUIRE(grad.norm() < 1e-8 * (1.0 + (X.transpose() * y).norm()));
  }
}

TEST_CASE("distance to prior is non-increasing in theta", "[linear]") {
  Rng rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix X = random_matrix(rng, 25, 4);
    Vector y = random_vector(rng, 25);
    Vector prior = random_vector(rng, 4);
    double last = std::numeric_limits<double>::infinity();
    for (double theta : {0.0, 1e-3, 1e-1, 1.0, 10.0, 1e3, 1e6, 1e9}) {
      Vector w = solve_ridge_with_prior({X, y, prior, theta});
      double dist = (w - prior).norm();
      REQUIRE(dist <= last * (1.0 + 1e-12) + 1e-12);
      last = dist;
    }
  }
}

TEST_CASE("fit_shared_scalar basics", "[linear]") {
  Matrix X = Matrix::Identity(2, 2);
  Vector y(2);
  y << 2, 2;
  Vector q(2);
  q << 1, 1;
  REQUIRE(fit_shared_scalar(X, y, q) == Catch::Approx(2.0).margin(1e-14));

  SECTION("perfect fit along q gives exactly one") {
    Rng rng(5);
    Matrix A = random_matrix(rng, 10, 3);
    Vector dir(3);
    dir << 1, -1, 1;
    Vector b = A * dir;
    REQUIRE(fit_shared_scalar(A, b, dir) == Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("odd symmetry in q") {
    Rng rng(6);
    Matrix A = random_matrix(rng, 10, 3);
    Vector b = random_vector(rng, 10);
    Vector dir(3);
    dir << 1, 0, -1;
    double s = fit_shared_scalar(A, b, dir);
    double s_neg = fit_shared_scalar(A, b, Vector(-dir));
    REQUIRE(s_neg == Catch::Approx(-s).margin(1e-12));
  }

  SECTION("zero collapsed design throws") {
    Matrix A(2, 2);
    A << 1, -1, 2, -2;
    Vector b(2);
    b << 1, 1;
    Vector dir(2);
    dir << 1, 1;
    REQUIRE_THROWS_AS(fit_shared_scalar(A, b, dir), degenerate_error);
  }
}

TEST_CASE("fit_shared_scalar equals OLS on the collapsed design", "[linear]") {
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix X = random_matrix(rng, 15, 4);
    Vector y = random_vector(rng, 15);
    Vector q(4);
    for (int j = 0; j < 4; ++j) {
      q(j) = static_cast<double>(rng.uniform_int(-1, 1));
    }
    if ((X * q).squaredNorm() == 0.0) continue;
    double s = fit_shared_scalar(X, y, q);
    Matrix collapsed = X * q;
    Vector w = solve_ols(collapsed, y);
    REQUIRE(std::abs(s - w(0)) < 1e-12);
  }
}
