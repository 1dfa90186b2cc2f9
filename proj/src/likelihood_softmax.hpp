#pragma once

#include "common.hpp"

namespace svgpc {

// Softmax classification via additive Gumbel noise. The per-point bound
// contribution is -log(P + 1), where
//   P = exp(var_y/2 - mu_y) * sum_{c != y} exp(var_c/2 + mu_c)
// and the per-point Gumbel variational parameter theta has been set to its
// stationary value theta* = P + 1 (so theta is never stored or trained).

// log P, evaluated through a log-sum-exp so large latent means cannot
// overflow
double softmax_log_P(int y, const Vector& mu, const Vector& var);

double softmax_P(int y, const Vector& mu, const Vector& var);

// -log1p(P)
double softmax_elbo_term(double P);
// same value computed from log P without forming P
double softmax_elbo_term_from_log(double logP);

// KL(Gumbel(log theta, 1) || Gumbel(0, 1)) = log theta + 1/theta - 1
double gumbel_kl(double theta);

// Monte-Carlo predictive class probabilities: the average of
// softmax(mu + sqrt(var) .* t) over n_samples standard-normal draws t.
// Deterministic for a fixed seed; `stream` splits the sample stream so
// per-point calls are independent.
Vector softmax_predict_mc(const Vector& mu_star, const Vector& var_star, int n_samples,
                          std::uint64_t seed, std::uint64_t stream = 0);

// softmax(x), overflow-safe
Vector softmax_vec(const Vector& x);

}  // namespace svgpc
