#pragma once

#include "common.hpp"
#include "kernels.hpp"
#include "numerics.hpp"

namespace svgpc {

struct InducingSet {
  Matrix Z;  // m x d
};

// q(u) = N(mean, scale scale^T); scale is lower triangular with a
// positive diagonal, so the covariance is SPD by construction.
struct GaussianVariational {
  Vector mean;
  Matrix scale;
};

// Latent marginals q(f_i) at n points for each of the C latent processes.
struct PredictiveMarginals {
  Matrix mu;   // n x C
  Matrix var;  // n x C, clamped at kMinVariance
};

// Diagonal marginals of q(f) = int p(f|u) q(u) du at the rows of X:
//   mu  = K_nm K_mm^{-1} m
//   var = diag(K_nn) + diag(K_nm K_mm^{-1} [S K_mm^{-1} - I] K_mn)
// Variances are clamped at kMinVariance before return.
void q_f_marginals(const KernelSpec& kernel, const InducingSet& Z,
                   const GaussianVariational& q_u, const Matrix& X, Vector& mu, Vector& var);

// KL(q(u) || N(0, K_mm)) =
//   0.5 (log|K| - log|S| - m + tr(K^{-1} S) + m^T K^{-1} m)
double kl_gaussian(const GaussianVariational& q_u, const CholeskyFactor& K_mm_chol);

}  // namespace svgpc
