#include "variational.hpp"

namespace svgpc {

void q_f_marginals(const KernelSpec& kernel, const InducingSet& Z,
                   const GaussianVariational& q_u, const Matrix& X, Vector& mu, Vector& var) {
  const Eigen::Index m = Z.Z.rows();
  if (q_u.mean.size() != m || q_u.scale.rows() != m || q_u.scale.cols() != m)
    throw Error(ErrorCode::dimension, "q_f_marginals: variational sizes do not match Z");
  if (X.cols() != Z.Z.cols())
    throw Error(ErrorCode::dimension, "q_f_marginals: input dimension does not match Z");

  const CholeskyFactor f = cholesky_jitter(kernel_matrix(kernel, Z.Z, Z.Z));
  const Matrix Kmn = kernel_matrix(kernel, Z.Z, X);

  const Matrix V = f.lower.triangularView<Eigen::Lower>().solve(Kmn);           // L^{-1} K_mn
  const Vector beta = f.lower.triangularView<Eigen::Lower>().solve(q_u.mean);   // L^{-1} m
  const Matrix U = f.lower.transpose().triangularView<Eigen::Upper>().solve(V); // K^{-1} K_mn
  const Matrix W = q_u.scale.transpose() * U;

  mu = V.transpose() * beta;
  var = kernel_diag(kernel, X) - V.colwise().squaredNorm().transpose() +
        W.colwise().squaredNorm().transpose();
  var = var.cwiseMax(kMinVariance);
}

double kl_gaussian(const GaussianVariational& q_u, const CholeskyFactor& K_mm_chol) {
  const Eigen::Index m = q_u.mean.size();
  const Matrix& L = K_mm_chol.lower;
  if (L.rows() != m || q_u.scale.rows() != m)
    throw Error(ErrorCode::dimension, "kl_gaussian: dimension mismatch");

  const double logdet_k = 2.0 * L.diagonal().array().log().sum();
  const double logdet_s = 2.0 * q_u.scale.diagonal().array().log().sum();
  const Matrix A = L.triangularView<Eigen::Lower>().solve(q_u.scale);  // L^{-1} Lq
  const Vector beta = L.triangularView<Eigen::Lower>().solve(q_u.mean);
  return 0.5 * (logdet_k - logdet_s - static_cast<double>(m) + A.squaredNorm() +
                beta.squaredNorm());
}

}  // namespace svgpc
