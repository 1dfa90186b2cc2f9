#pragma once

#include "common.hpp"

namespace svgpc {

// Gauss-Hermite rule in the physicists' convention: integrates
// f against exp(-x^2), so sum(weights) = sqrt(pi). Nodes are symmetric
// about zero and sorted ascending.
struct GaussHermiteRule {
  int order = 0;
  Vector nodes;
  Vector weights;
};

// Nodes/weights by Newton iteration on the orthonormal Hermite recurrence;
// weights via the Christoffel sum 1 / sum_k p_k(x)^2. Valid for
// 1 <= order <= 128.
GaussHermiteRule gauss_hermite(int order);

struct CholeskyFactor {
  Matrix lower;        // L with L L^T = A + jitter_used * I
  double jitter_used = 0.0;
};

// Escalating-jitter Cholesky: tries jitter coefficients
// {0, 1e-8, 1e-6, 1e-4, 1e-2} * mean(diag(A)) in order and returns the
// first factorization that succeeds. max_attempts caps how many schedule
// entries are tried (clamped to the schedule length).
CholeskyFactor cholesky_jitter(const Matrix& A, int max_attempts = 5);

// Jitter coefficients used by cholesky_jitter, relative to mean(diag(A)).
const std::vector<double>& cholesky_jitter_schedule();

double std_normal_cdf(double x);
double std_normal_pdf(double x);
// log Phi(x), finite for all finite x (asymptotic expansion in the far
// lower tail where erfc underflows)
double log_std_normal_cdf(double x);

double logistic_cdf(double x);
double gumbel_pdf(double x);
double gumbel_cdf(double x);

// numerically stable log(1 + exp(x))
double softplus(double x);
double sigmoid(double x);

// Lloyd's algorithm with k-means++ seeding, at most 100 iterations.
// Empty clusters are reseeded to the point farthest from its assigned
// center. Deterministic for a fixed seed.
Matrix kmeans(const Matrix& points, int k, std::uint64_t seed);

}  // namespace svgpc
