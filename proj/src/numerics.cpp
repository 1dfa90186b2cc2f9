#include "numerics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace svgpc {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrtPi = 1.7724538509055160273;

// Orthonormal Hermite polynomials w.r.t. exp(-x^2):
//   p_0 = pi^{-1/4},  p_{j+1} = x sqrt(2/(j+1)) p_j - sqrt(j/(j+1)) p_{j-1}
// Evaluates p_n(x) and the Christoffel sum  sum_{k<n} p_k(x)^2.
void hermite_eval(int n, double x, double& pn, double& pn1, double& christoffel) {
  double p0 = std::pow(kPi, -0.25);
  double pm1 = 0.0;
  christoffel = 0.0;
  for (int j = 0; j < n; ++j) {
    christoffel += p0 * p0;
    const double p1 = x * std::sqrt(2.0 / (j + 1)) * p0 - std::sqrt(static_cast<double>(j) / (j + 1)) * pm1;
    pm1 = p0;
    p0 = p1;
  }
  pn = p0;
  pn1 = pm1;
}

}  // namespace

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1 || order > 128)
    throw Error(ErrorCode::invalid_argument, "gauss_hermite: order must be in [1, 128]");

  GaussHermiteRule rule;
  rule.order = order;
  rule.nodes = Vector::Zero(order);
  rule.weights = Vector::Zero(order);

  const int half = (order + 1) / 2;
  double z = 0.0, z_prev1 = 0.0, z_prev2 = 0.0;
  for (int i = 0; i < half; ++i) {
    // initial guesses for the roots, largest first (Stroud/Secrest style)
    if (i == 0) {
      z = std::sqrt(2.0 * order + 1.0) - 1.85575 * std::pow(2.0 * order + 1.0, -1.0 / 6.0);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(order), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * z_prev2;
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * z_prev2;
    } else {
      z = 2.0 * z - z_prev2;
    }

    double pn = 0.0, pn1 = 0.0, chr = 0.0;
    for (int it = 0; it < 100; ++it) {
      hermite_eval(order, z, pn, pn1, chr);
      const double dp = std::sqrt(2.0 * order) * pn1;  // p_n'(x) = sqrt(2n) p_{n-1}(x)
      const double dz = pn / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    hermite_eval(order, z, pn, pn1, chr);

    z_prev2 = z_prev1;
    z_prev1 = z;

    const int hi = order - 1 - i;
    double x = z;
    if (2 * i + 1 == order) x = 0.0;  // middle root of an odd rule is exactly 0
    const double w = 1.0 / chr;
    rule.nodes[hi] = x;
    rule.nodes[i] = -x;
    rule.weights[hi] = w;
    rule.weights[i] = w;
  }
  if (order % 2 == 1) {
    // recompute the center weight at exactly x = 0
    double pn, pn1, chr;
    hermite_eval(order, 0.0, pn, pn1, chr);
    rule.weights[half - 1] = 1.0 / chr;
  }
  return rule;
}

const std::vector<double>& cholesky_jitter_schedule() {
  static const std::vector<double> schedule = {0.0, 1e-8, 1e-6, 1e-4, 1e-2};
  return schedule;
}

CholeskyFactor cholesky_jitter(const Matrix& A, int max_attempts) {
  const Eigen::Index n = A.rows();
  if (n < 1 || A.cols() != n)
    throw Error(ErrorCode::dimension, "cholesky_jitter: matrix must be square with dimension >= 1");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorCode::invalid_argument, "cholesky_jitter: matrix is not symmetric");

  const double mean_diag = A.diagonal().mean();
  const auto& schedule = cholesky_jitter_schedule();
  const int attempts = std::min<int>(std::max(max_attempts, 1), static_cast<int>(schedule.size()));
  for (int k = 0; k < attempts; ++k) {
    const double jitter = schedule[k] * mean_diag;
    Matrix Aj = A;
    Aj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(Aj);
    if (llt.info() == Eigen::Success) {
      CholeskyFactor f;
      f.lower = llt.matrixL();
      f.jitter_used = jitter;
      if (f.lower.diagonal().minCoeff() > 0.0 && f.lower.allFinite()) return f;
    }
  }
  throw Error(ErrorCode::numeric,
              "cholesky_jitter: factorization failed for all jitter levels "
              "(kernel matrix badly conditioned)");
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_std_normal_cdf(double x) {
  if (x > -1.0) return std::log1p(-0.5 * std::erfc(x / std::sqrt(2.0)));
  if (x > -36.0) return std::log(0.5 * std::erfc(-x / std::sqrt(2.0)));
  // far lower tail: log Phi(x) ~ -x^2/2 - log(-x sqrt(2 pi)) + log1p(series)
  const double x2 = x * x;
  double term = 1.0, series = 0.0;
  // 1 - 1/x^2 + 3/x^4 - 15/x^6 + ... ; |x| >= 36 so seven terms reach 1e-16
  double coef = 1.0;
  for (int k = 1; k <= 7; ++k) {
    coef *= -(2.0 * k - 1.0);
    term = coef / std::pow(x2, k);
    series += term;
  }
  return -0.5 * x2 - std::log(-x * std::sqrt(2.0 * kPi)) + std::log1p(series);
}

double logistic_cdf(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid(double x) { return logistic_cdf(x); }

double softplus(double x) {
  if (x > 32.0) return x;
  if (x < -32.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double gumbel_pdf(double x) { return std::exp(-x - std::exp(-x)); }

double gumbel_cdf(double x) { return std::exp(-std::exp(-x)); }

namespace {

double sq_distance(const Matrix& P, int i, const Matrix& C, int j) {
  return (P.row(i) - C.row(j)).squaredNorm();
}

}  // namespace

Matrix kmeans(const Matrix& points, int k, std::uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n)
    throw Error(ErrorCode::invalid_argument, "kmeans: need 1 <= k <= n");

  Rng rng(seed, /*stream=*/0x6b6d65616e73ULL);
  Matrix centers(k, points.cols());

  // k-means++ seeding
  centers.row(0) = points.row(static_cast<int>(rng.uniform_int(n)));
  Vector d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], sq_distance(points, i, centers, c - 1));
    const double total = d2.sum();
    int pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total, acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_int(n));
    }
    centers.row(c) = points.row(pick);
  }

  std::vector<int> assign(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_distance(points, i, centers, 0);
      for (int c = 1; c < k; ++c) {
        const double d = sq_distance(points, i, centers, c);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[i] != best) {
        assign[i] = best;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(assign[i]) += points.row(i);
      ++counts[assign[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // reseed an empty cluster to the point farthest from its center
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = sq_distance(points, i, centers, assign[i]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(c) = points.row(far);
        assign[far] = c;
      }
    }
  }
  return centers;
}

}  // namespace svgpc
