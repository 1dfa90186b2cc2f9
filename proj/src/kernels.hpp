#pragma once

#include "common.hpp"

#include <vector>

namespace svgpc {

enum class KernelFamily { RBF, Matern32, Matern52, Sum };

// Stationary covariance function with one isotropic lengthscale per
// component. A Sum kernel holds >= 2 children and ignores its own
// lengthscale/variance.
struct KernelSpec {
  KernelFamily family = KernelFamily::RBF;
  double lengthscale = 1.0;
  double variance = 1.0;
  std::vector<KernelSpec> children;

  static KernelSpec rbf(double ls, double var) { return {KernelFamily::RBF, ls, var, {}}; }
  static KernelSpec matern32(double ls, double var) { return {KernelFamily::Matern32, ls, var, {}}; }
  static KernelSpec matern52(double ls, double var) { return {KernelFamily::Matern52, ls, var, {}}; }
  static KernelSpec sum(std::vector<KernelSpec> parts) {
    KernelSpec s;
    s.family = KernelFamily::Sum;
    s.children = std::move(parts);
    return s;
  }
};

void validate_kernel(const KernelSpec& spec);

const char* kernel_family_name(KernelFamily f);
KernelFamily kernel_family_from_name(const std::string& name);

// Number of elementary (non-Sum) kernels, each carrying one
// (lengthscale, variance) pair.
int kernel_leaf_count(const KernelSpec& spec);

// Pairwise squared Euclidean distances between rows, clamped at zero.
Matrix pairwise_sqdist(const Matrix& A, const Matrix& B);

// K[i][j] = k(X.row(i), X2.row(j))
Matrix kernel_matrix(const KernelSpec& spec, const Matrix& X, const Matrix& X2);

// diagonal of kernel_matrix(spec, X, X) without forming the matrix
Vector kernel_diag(const KernelSpec& spec, const Matrix& X);

// k(r^2) applied to a precomputed squared-distance matrix
Matrix kernel_from_sqdist(const KernelSpec& spec, const Matrix& D2);

}  // namespace svgpc
