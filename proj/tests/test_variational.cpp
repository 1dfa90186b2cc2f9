#include "variational.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace svgpc;

TEST_SUITE_BEGIN("variational");

namespace {

Matrix random_points(int n, int d, Rng& rng, double scale = 1.0) {
  Matrix X(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) X(i, j) = scale * rng.normal();
  return X;
}

}  // namespace

TEST_CASE("prior recovery: q(u) = p(u) gives mu = 0, var = prior diag") {
  Rng rng(3);
  for (const auto& spec : {KernelSpec::rbf(0.8, 5.0), KernelSpec::matern32(1.2, 2.0),
                           KernelSpec::matern52(0.7, 1.3)}) {
    const Matrix Z = random_points(6, 2, rng);
    const Matrix X = random_points(11, 2, rng);
    GaussianVariational q;
    q.mean = Vector::Zero(6);
    q.scale = cholesky_jitter(kernel_matrix(spec, Z, Z)).lower;
    Vector mu, var;
    q_f_marginals(spec, {Z}, q, X, mu, var);
    CHECK(mu.cwiseAbs().maxCoeff() < 1e-8);
    CHECK((var - kernel_diag(spec, X)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("Z = X with tiny scale: q(f) pins down to the variational mean") {
  Rng rng(8);
  const Matrix X = random_points(5, 2, rng);
  GaussianVariational q;
  q.mean = Vector::LinSpaced(5, -1.0, 1.5);
  q.scale = 1e-6 * Matrix::Identity(5, 5);
  Vector mu, var;
  q_f_marginals(KernelSpec::rbf(1.0, 2.0), {X}, q, X, mu, var);
  CHECK((mu - q.mean).cwiseAbs().maxCoeff() < 1e-4);
  // var collapses to roughly scale^2 = 1e-12 (the clamp floor)
  CHECK(var.maxCoeff() < 1e-4);
}

TEST_CASE("single inducing point located at the test point") {
  Matrix Z(1, 2);
  Z << 0.3, -0.7;
  GaussianVariational q;
  q.mean = Vector::Constant(1, 1.234);
  q.scale = Matrix::Constant(1, 1, 0.5);
  Vector mu, var;
  q_f_marginals(KernelSpec::matern32(0.9, 3.0), {Z}, q, Z, mu, var);
  // K_*m K_mm^{-1} = 1, so mu = mean and var = S_11
  CHECK(mu[0] == doctest::Approx(1.234).epsilon(1e-10));
  CHECK(var[0] == doctest::Approx(0.25).epsilon(1e-8));
}

TEST_CASE("variances stay above the clamp floor") {
  Rng rng(5);
  const Matrix X = random_points(40, 2, rng, 0.01);  // nearly coincident points
  GaussianVariational q;
  q.mean = Vector::Zero(8);
  const Matrix Z = random_points(8, 2, rng, 0.01);
  q.scale = 1e-9 * Matrix::Identity(8, 8);
  Vector mu, var;
  q_f_marginals(KernelSpec::rbf(2.0, 5.0), {Z}, q, X, mu, var);
  CHECK(var.minCoeff() >= kMinVariance);
}

TEST_CASE("halving the scale never increases var when Z = X") {
  Rng rng(17);
  const Matrix X = random_points(7, 2, rng);
  const KernelSpec spec = KernelSpec::rbf(1.1, 2.5);
  GaussianVariational q;
  q.mean = Vector::Zero(7);
  q.scale = cholesky_jitter(kernel_matrix(spec, X, X)).lower;
  Vector mu1, var1, mu2, var2;
  q_f_marginals(spec, {X}, q, X, mu1, var1);
  q.scale *= 0.5;
  q_f_marginals(spec, {X}, q, X, mu2, var2);
  for (int i = 0; i < 7; ++i) CHECK(var2[i] <= var1[i] + 1e-12);
}

TEST_CASE("kl_gaussian: zero at the prior") {
  Rng rng(23);
  const Matrix Z = random_points(5, 2, rng);
  const auto f = cholesky_jitter(kernel_matrix(KernelSpec::rbf(1.0, 2.0), Z, Z));
  GaussianVariational q;
  q.mean = Vector::Zero(5);
  q.scale = f.lower;
  CHECK(std::abs(kl_gaussian(q, f)) < 1e-10);
}

TEST_CASE("kl_gaussian: identity covariances reduce to half the squared mean") {
  CholeskyFactor f;
  f.lower = Matrix::Identity(3, 3);
  f.jitter_used = 0.0;
  GaussianVariational q;
  q.mean = Vector::Zero(3);
  q.mean[0] = 1.0;
  q.scale = Matrix::Identity(3, 3);
  CHECK(kl_gaussian(q, f) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("kl_gaussian matches a generic multivariate-Gaussian oracle") {
  Rng rng(31);
  const Matrix K = oracle::random_spd(5, rng);
  const Matrix S = oracle::random_spd(5, rng);
  Vector mean(5);
  for (int i = 0; i < 5; ++i) mean[i] = rng.normal();

  CholeskyFactor f;
  f.lower = Eigen::LLT<Matrix>(K).matrixL();
  GaussianVariational q;
  q.mean = mean;
  q.scale = Eigen::LLT<Matrix>(S).matrixL();

  const double expect = oracle::gaussian_kl(mean, S, Vector::Zero(5), K);
  CHECK(kl_gaussian(q, f) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("kl_gaussian is nonnegative on random inputs") {
  Rng rng(57);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(rng.uniform_int(8));
    CholeskyFactor f;
    f.lower = Eigen::LLT<Matrix>(Matrix(oracle::random_spd(dim, rng))).matrixL();
    GaussianVariational q;
    q.mean = Vector::Zero(dim);
    for (int i = 0; i < dim; ++i) q.mean[i] = rng.normal();
    q.scale = Eigen::LLT<Matrix>(Matrix(oracle::random_spd(dim, rng))).matrixL();
    CHECK(kl_gaussian(q, f) >= -1e-10);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  GaussianVariational q;
  q.mean = Vector::Zero(3);
  q.scale = Matrix::Identity(3, 3);
  Matrix Z = Matrix::Zero(4, 2);
  Vector mu, var;
  CHECK_THROWS_AS(q_f_marginals(KernelSpec::rbf(1, 1), {Z}, q, Matrix::Zero(2, 2), mu, var),
                  Error);
  CholeskyFactor f;
  f.lower = Matrix::Identity(4, 4);
  CHECK_THROWS_AS(kl_gaussian(q, f), Error);
}

TEST_SUITE_END();
