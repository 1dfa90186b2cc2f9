#include "kernels.hpp"

#include <cmath>

namespace svgpc {

void validate_kernel(const KernelSpec& spec) {
  if (spec.family == KernelFamily::Sum) {
    if (spec.children.size() < 2)
      throw Error(ErrorCode::invalid_argument, "Sum kernel needs at least 2 children");
    for (const auto& c : spec.children) validate_kernel(c);
    return;
  }
  if (!spec.children.empty())
    throw Error(ErrorCode::invalid_argument, "only Sum kernels may have children");
  if (!(spec.lengthscale > 0.0) || !(spec.variance > 0.0))
    throw Error(ErrorCode::invalid_argument, "kernel lengthscale and variance must be positive");
}

const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::RBF: return "rbf";
    case KernelFamily::Matern32: return "matern32";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Sum: return "sum";
  }
  return "unknown";
}

KernelFamily kernel_family_from_name(const std::string& name) {
  if (name == "rbf") return KernelFamily::RBF;
  if (name == "matern32") return KernelFamily::Matern32;
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "sum") return KernelFamily::Sum;
  throw Error(ErrorCode::invalid_argument, "unknown kernel family: " + name);
}

int kernel_leaf_count(const KernelSpec& spec) {
  if (spec.family != KernelFamily::Sum) return 1;
  int n = 0;
  for (const auto& c : spec.children) n += kernel_leaf_count(c);
  return n;
}

Matrix pairwise_sqdist(const Matrix& A, const Matrix& B) {
  if (A.cols() != B.cols())
    throw Error(ErrorCode::dimension, "pairwise_sqdist: column counts differ");
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  Matrix D = -2.0 * (A * B.transpose());
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  return D.cwiseMax(0.0);
}

Matrix kernel_from_sqdist(const KernelSpec& spec, const Matrix& D2) {
  switch (spec.family) {
    case KernelFamily::RBF: {
      const double g = -0.5 / (spec.lengthscale * spec.lengthscale);
      return spec.variance * (D2.array() * g).exp();
    }
    case KernelFamily::Matern32: {
      const Matrix t = std::sqrt(3.0) / spec.lengthscale * D2.cwiseSqrt();
      return spec.variance * ((1.0 + t.array()) * (-t.array()).exp());
    }
    case KernelFamily::Matern52: {
      const Matrix t = std::sqrt(5.0) / spec.lengthscale * D2.cwiseSqrt();
      return spec.variance *
             ((1.0 + t.array() + t.array().square() / 3.0) * (-t.array()).exp());
    }
    case KernelFamily::Sum: {
      Matrix K = kernel_from_sqdist(spec.children[0], D2);
      for (size_t i = 1; i < spec.children.size(); ++i)
        K += kernel_from_sqdist(spec.children[i], D2);
      return K;
    }
  }
  throw Error(ErrorCode::invalid_argument, "kernel_from_sqdist: bad family");
}

Matrix kernel_matrix(const KernelSpec& spec, const Matrix& X, const Matrix& X2) {
  validate_kernel(spec);
  return kernel_from_sqdist(spec, pairwise_sqdist(X, X2));
}

namespace {

// k(x, x) for a stationary kernel
double kernel_zero_value(const KernelSpec& spec) {
  if (spec.family != KernelFamily::Sum) return spec.variance;
  double k0 = 0.0;
  for (const auto& c : spec.children) k0 += kernel_zero_value(c);
  return k0;
}

}  // namespace

Vector kernel_diag(const KernelSpec& spec, const Matrix& X) {
  validate_kernel(spec);
  return Vector::Constant(X.rows(), kernel_zero_value(spec));
}

}  // namespace svgpc
