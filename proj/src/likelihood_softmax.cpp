#include "likelihood_softmax.hpp"

#include "numerics.hpp"

#include <cmath>

namespace svgpc {

double softmax_log_P(int y, const Vector& mu, const Vector& var) {
  const int C = static_cast<int>(mu.size());
  if (C < 2 || var.size() != C)
    throw Error(ErrorCode::dimension, "softmax_log_P: need C >= 2 matching mu/var");
  if (y < 0 || y >= C) throw Error(ErrorCode::invalid_argument, "softmax_log_P: label out of range");
  if (var.minCoeff() < 0.0)
    throw Error(ErrorCode::invalid_argument, "softmax_log_P: var must be >= 0");

  double hi = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < C; ++c)
    if (c != y) hi = std::max(hi, 0.5 * var[c] + mu[c]);
  double s = 0.0;
  for (int c = 0; c < C; ++c)
    if (c != y) s += std::exp(0.5 * var[c] + mu[c] - hi);
  return 0.5 * var[y] - mu[y] + hi + std::log(s);
}

double softmax_P(int y, const Vector& mu, const Vector& var) {
  return std::exp(softmax_log_P(y, mu, var));
}

double softmax_elbo_term(double P) {
  if (!(P > 0.0)) throw Error(ErrorCode::invalid_argument, "softmax_elbo_term: P must be > 0");
  return -std::log1p(P);
}

double softmax_elbo_term_from_log(double logP) {
  // -log(1 + e^{logP}) = -softplus(logP)
  return -softplus(logP);
}

double gumbel_kl(double theta) {
  if (!(theta > 0.0)) throw Error(ErrorCode::invalid_argument, "gumbel_kl: theta must be > 0");
  return std::log(theta) + 1.0 / theta - 1.0;
}

Vector softmax_vec(const Vector& x) {
  const double hi = x.maxCoeff();
  Vector e = (x.array() - hi).exp();
  return e / e.sum();
}

Vector softmax_predict_mc(const Vector& mu_star, const Vector& var_star, int n_samples,
                          std::uint64_t seed, std::uint64_t stream) {
  const int C = static_cast<int>(mu_star.size());
  if (C < 2 || var_star.size() != C)
    throw Error(ErrorCode::dimension, "softmax_predict_mc: need C >= 2 matching mu/var");
  if (n_samples < 1)
    throw Error(ErrorCode::invalid_argument, "softmax_predict_mc: n_samples must be >= 1");
  if (var_star.minCoeff() < 0.0)
    throw Error(ErrorCode::invalid_argument, "softmax_predict_mc: var must be >= 0");

  const Vector sd = var_star.cwiseSqrt();
  Rng rng(seed, stream);
  Vector acc = Vector::Zero(C);
  Vector f(C);
  for (int s = 0; s < n_samples; ++s) {
    for (int c = 0; c < C; ++c) f[c] = mu_star[c] + sd[c] * rng.normal();
    acc += softmax_vec(f);
  }
  return acc / static_cast<double>(n_samples);
}

}  // namespace svgpc
