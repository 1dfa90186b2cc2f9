#include "likelihood_unified.hpp"

#include <cmath>

namespace svgpc {

namespace {
constexpr double kInvSqrtPi = 0.5641895835477562869;
}

double binary_elbo_term(int y, double mu, double var, const NoiseFamily& nf) {
  if (var < 0.0) throw Error(ErrorCode::invalid_argument, "binary_elbo_term: var must be >= 0");
  const double d = nf.delta();
  const double z = y * mu / std::sqrt(nf.a() + std::max(var, kMinVariance));
  return (std::log1p(-d) - std::log(d)) * std_normal_cdf(z) + std::log(d);
}

double binary_predict(double mu_star, double var_star, const NoiseFamily& nf) {
  if (var_star < 0.0) throw Error(ErrorCode::invalid_argument, "binary_predict: var must be >= 0");
  const double d = nf.delta();
  const double z = mu_star / std::sqrt(nf.a() + std::max(var_star, kMinVariance));
  return (1.0 - 2.0 * d) * std_normal_cdf(z) + d;
}

double multiclass_S(int y, const Vector& mu, const Vector& var, const NoiseFamily& nf,
                    const GaussHermiteRule& rule) {
  const int C = static_cast<int>(mu.size());
  if (C < 2 || var.size() != C)
    throw Error(ErrorCode::dimension, "multiclass_S: need C >= 2 matching mu/var");
  if (y < 0 || y >= C) throw Error(ErrorCode::invalid_argument, "multiclass_S: label out of range");

  const double a = nf.a();
  const double sy = std::sqrt(2.0 * (a + std::max(var[y], kMinVariance)));
  double S = 0.0;
  for (int k = 0; k < rule.order; ++k) {
    const double g = mu[y] + sy * rule.nodes[k];
    double logprod = 0.0;
    for (int c = 0; c < C; ++c) {
      if (c == y) continue;
      const double denom = std::sqrt(a + std::max(var[c], kMinVariance));
      logprod += log_std_normal_cdf((g - mu[c]) / denom);
    }
    S += rule.weights[k] * std::exp(logprod);
  }
  S *= kInvSqrtPi;
  // quadrature round-off can leave S marginally outside (0, 1)
  return std::min(std::max(S, 1e-300), 1.0);
}

double multiclass_elbo_term(double S, const NoiseFamily& nf, int classes) {
  if (S < 0.0 || S > 1.0) throw Error(ErrorCode::invalid_argument, "multiclass_elbo_term: S in [0,1]");
  const double d = nf.delta();
  return std::log1p(-d) * S + (std::log(d) - std::log(classes - 1.0)) * (1.0 - S);
}

Vector multiclass_predict(const Vector& mu_star, const Vector& var_star, const NoiseFamily& nf,
                          const GaussHermiteRule& rule) {
  const int C = static_cast<int>(mu_star.size());
  const double d = nf.delta();
  Vector p(C);
  for (int c = 0; c < C; ++c) {
    const double S = multiclass_S(c, mu_star, var_star, nf, rule);
    p[c] = (1.0 - d) * S + d / (C - 1.0) * (1.0 - S);
  }
  return p;
}

double delta_stationary(const Vector& mu, const Vector& var,
                        const Eigen::VectorXi& y, const NoiseFamily& nf) {
  const Eigen::Index n = mu.size();
  if (n < 1 || var.size() != n || y.size() != n)
    throw Error(ErrorCode::dimension, "delta_stationary: size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    acc += std_normal_cdf(y[i] * mu[i] / std::sqrt(nf.a() + std::max(var[i], kMinVariance)));
  return 1.0 - acc / static_cast<double>(n);
}

}  // namespace svgpc
