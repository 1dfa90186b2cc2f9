// Independent reference implementations used to pin expected values.
// Everything here deliberately avoids the library's own computational
// paths: quadrature rules come from a Jacobi-matrix eigendecomposition,
// the normal CDF from a Taylor series, Gaussian KL from explicit
// inverses/determinants, and expectations from brute-force Monte Carlo.

#pragma once

#include "common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>

namespace oracle {

using svgpc::Matrix;
using svgpc::Vector;

// Golub-Welsch: physicists' Gauss-Hermite nodes/weights from the symmetric
// tridiagonal Jacobi matrix with off-diagonals sqrt(k/2).
inline void golub_welsch_hermite(int order, Vector& nodes, Vector& weights) {
  Matrix J = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const double b = std::sqrt(k / 2.0);
    J(k, k - 1) = b;
    J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  nodes = es.eigenvalues();
  weights.resize(order);
  const double mu0 = std::sqrt(3.14159265358979323846);  // integral of e^{-x^2}
  for (int i = 0; i < order; ++i) {
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

// analytic integral of x^k e^{-x^2} over the real line
inline double hermite_moment(int k) {
  if (k % 2 == 1) return 0.0;
  // sqrt(pi) (k-1)!! / 2^{k/2}
  double dfact = 1.0;
  for (int j = k - 1; j > 1; j -= 2) dfact *= j;
  return std::sqrt(3.14159265358979323846) * dfact / std::pow(2.0, k / 2.0);
}

// Taylor series for the standard normal CDF about 0 (converges for the
// moderate arguments used in tests)
inline double normal_cdf_series(double x) {
  const double phi0 = 1.0 / std::sqrt(2.0 * 3.14159265358979323846);
  double term = x;
  double sum = x;
  for (int k = 1; k < 200; ++k) {
    term *= -x * x * (2.0 * k - 1) / (2.0 * k * (2.0 * k + 1));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return 0.5 + phi0 * sum;
}

// KL(N(m0, S0) || N(m1, S1)) via explicit inverse and determinant
inline double gaussian_kl(const Vector& m0, const Matrix& S0, const Vector& m1,
                          const Matrix& S1) {
  const auto d = static_cast<double>(m0.size());
  const Matrix S1inv = S1.inverse();
  const Vector diff = m1 - m0;
  return 0.5 * (std::log(S1.determinant() / S0.determinant()) - d + (S1inv * S0).trace() +
                diff.dot(S1inv * diff));
}

// composite Simpson quadrature
inline double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  if (intervals % 2 == 1) ++intervals;
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// central finite difference of a scalar function
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// streaming mean and standard error over n draws of f()
inline MeanStderr monte_carlo(const std::function<double()>& draw, long n) {
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double v = draw();
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / static_cast<double>(n);
  const double var = sumsq / static_cast<double>(n) - mean * mean;
  return {mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n))};
}

// random SPD matrix A = B B^T + eps I
inline Matrix random_spd(int dim, svgpc::Rng& rng, double eps = 1e-3) {
  Matrix B(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) B(i, j) = rng.normal();
  Matrix A = B * B.transpose();
  A.diagonal().array() += eps;
  return A;
}

}  // namespace oracle
