#pragma once

#include "model.hpp"

#include <functional>

namespace svgpc::detail {

// In-order walk over the elementary (non-Sum) kernels; defines the
// parameter ordering shared by pack/unpack and the ELBO graph.
void for_each_elementary(const KernelSpec& spec,
                         const std::function<void(const KernelSpec&)>& fn);
void for_each_elementary_mut(KernelSpec& spec, const std::function<void(KernelSpec&)>& fn);

struct ElboResult {
  double value = 0.0;
  double data_term = 0.0;  // scaled by n_total / batch
  double kl_total = 0.0;
};

// Builds the bound's computation graph for one batch; when grad is not
// null, runs the reverse sweep and writes the gradient in packed-parameter
// order.
ElboResult elbo_eval(const ModelState& model, const Matrix& X_batch,
                     const Eigen::VectorXi& y_batch, const GaussHermiteRule& rule, Vector* grad);

}  // namespace svgpc::detail
