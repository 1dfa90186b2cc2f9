#include "autodiff.hpp"
#include "model_internal.hpp"

#include <array>
#include <cmath>

namespace svgpc::detail {

namespace {

using ad::Tape;
using ad::Var;

// One (log lengthscale, log variance) pair per elementary kernel, in the
// same in-order walk as pack_params.
using LeafVars = std::vector<std::array<Var, 2>>;

Var kernel_from_sqdist_ad(Tape& t, const KernelSpec& spec, const LeafVars& leaves,
                          size_t& cursor, Var D2) {
  if (spec.family == KernelFamily::Sum) {
    Var acc = kernel_from_sqdist_ad(t, spec.children[0], leaves, cursor, D2);
    for (size_t i = 1; i < spec.children.size(); ++i)
      acc = t.add(acc, kernel_from_sqdist_ad(t, spec.children[i], leaves, cursor, D2));
    return acc;
  }
  const Var log_ls = leaves[cursor][0];
  const Var log_var = leaves[cursor][1];
  ++cursor;
  const Var sigma2 = t.vexp(log_var);
  switch (spec.family) {
    case KernelFamily::RBF: {
      // sigma^2 exp(-r^2 / (2 l^2))
      const Var inv2l2 = t.scale(t.vexp(t.scale(log_ls, -2.0)), -0.5);
      return t.smul(t.vexp(t.smul(D2, inv2l2)), sigma2);
    }
    case KernelFamily::Matern32: {
      // sigma^2 (1 + u) exp(-u), u = sqrt(3) r / l
      const Var u = t.smul(t.vsqrt(D2), t.scale(t.vexp(t.neg(log_ls)), std::sqrt(3.0)));
      return t.smul(t.mul(t.shift(u, 1.0), t.vexp(t.neg(u))), sigma2);
    }
    case KernelFamily::Matern52: {
      // sigma^2 (1 + u + u^2/3) exp(-u), u = sqrt(5) r / l
      const Var u = t.smul(t.vsqrt(D2), t.scale(t.vexp(t.neg(log_ls)), std::sqrt(5.0)));
      const Var poly = t.shift(t.add(u, t.scale(t.mul(u, u), 1.0 / 3.0)), 1.0);
      return t.smul(t.mul(poly, t.vexp(t.neg(u))), sigma2);
    }
    default:
      throw Error(ErrorCode::invalid_argument, "kernel_from_sqdist_ad: bad family");
  }
}

// k(x, x) as a 1x1 Var (stationary kernels: total variance)
Var kernel_zero_ad(Tape& t, const KernelSpec& spec, const LeafVars& leaves, size_t& cursor) {
  if (spec.family == KernelFamily::Sum) {
    Var acc = kernel_zero_ad(t, spec.children[0], leaves, cursor);
    for (size_t i = 1; i < spec.children.size(); ++i)
      acc = t.add(acc, kernel_zero_ad(t, spec.children[i], leaves, cursor));
    return acc;
  }
  const Var log_var = leaves[cursor][1];
  ++cursor;
  return t.vexp(log_var);
}

// per-kernel-slot pieces reused by every latent sharing the slot
struct SlotGraph {
  Var L;           // chol(K_mm + jitter)
  Var V;           // L^{-1} K_mn
  Var U;           // K_mm^{-1} K_mn
  Var v_colsq;     // n x 1 column sums of V .* V
  Var prior_diag;  // n x 1, k(x, x)
  Var logdet_k;    // 1x1
};

SlotGraph build_slot(Tape& t, const KernelSpec& spec, const LeafVars& leaves, Var Zv, Var Xc,
                     Eigen::Index m, Eigen::Index nb) {
  SlotGraph s;
  size_t cursor = 0;
  const Var Kmm = kernel_from_sqdist_ad(t, spec, leaves, cursor, t.sqdist(Zv, Zv));

  // smallest jitter from the escalation schedule that factorizes, probed on
  // values; the jitter itself stays differentiable through mean(diag)
  const Matrix& Kval = t.val(Kmm);
  const double mean_diag = Kval.diagonal().mean();
  double coef = -1.0;
  for (double c : cholesky_jitter_schedule()) {
    Matrix probe = Kval;
    probe.diagonal().array() += c * mean_diag;
    if (Eigen::LLT<Matrix>(probe).info() == Eigen::Success) {
      coef = c;
      break;
    }
  }
  if (coef < 0.0)
    throw Error(ErrorCode::numeric,
                "elbo: inducing kernel matrix not factorizable at any jitter level");
  Var Kj = Kmm;
  if (coef > 0.0) {
    const Var mean_diag_v = t.scale(t.sum(t.diag_vec(Kmm)), 1.0 / static_cast<double>(m));
    Kj = t.add_scaled_identity(Kmm, t.scale(mean_diag_v, coef));
  }
  s.L = t.chol(Kj);
  s.logdet_k = t.scale(t.sum(t.vlog(t.diag_vec(s.L))), 2.0);

  cursor = 0;
  const Var Kmn = kernel_from_sqdist_ad(t, spec, leaves, cursor, t.sqdist(Zv, Xc));
  s.V = t.solve_lower(s.L, Kmn);
  s.U = t.solve_lower_t(s.L, s.V);
  s.v_colsq = ad::col_sums_sq(t, s.V);

  cursor = 0;
  const Var sigma2 = kernel_zero_ad(t, spec, leaves, cursor);
  s.prior_diag = t.smul(t.constant(Matrix::Ones(nb, 1)), sigma2);
  return s;
}

struct LatentGraph {
  Var mu;   // n x 1
  Var var;  // n x 1, clamped
  Var kl;   // 1x1
};

LatentGraph build_latent(Tape& t, const SlotGraph& s, Var mean, Var packed, Eigen::Index m) {
  LatentGraph g;
  const Var beta = t.solve_lower(s.L, mean);
  g.mu = t.matmul(t.transpose(s.V), beta);

  const Var Lq = t.lower_from_packed(packed, static_cast<int>(m));
  const Var W = t.matmul(t.transpose(Lq), s.U);
  g.var = t.clamp_min(t.add(t.sub(s.prior_diag, s.v_colsq), ad::col_sums_sq(t, W)),
                      kMinVariance);

  const Var logdet_s = t.scale(t.sum(t.vlog(t.diag_vec(Lq))), 2.0);
  const Var trace = ad::sum_sq(t, t.solve_lower(s.L, Lq));
  const Var maha = ad::sum_sq(t, beta);
  g.kl = t.scale(
      t.shift(t.add(t.sub(s.logdet_k, logdet_s), t.add(trace, maha)), -static_cast<double>(m)),
      0.5);
  return g;
}

}  // namespace

ElboResult elbo_eval(const ModelState& model, const Matrix& X_batch,
                     const Eigen::VectorXi& y_batch, const GaussHermiteRule& rule, Vector* grad) {
  const Eigen::Index nb = X_batch.rows();
  if (nb < 1) throw Error(ErrorCode::invalid_argument, "elbo: empty batch");
  if (y_batch.size() != nb) throw Error(ErrorCode::dimension, "elbo: label count mismatch");
  if (X_batch.cols() != model.inducing.Z.cols())
    throw Error(ErrorCode::dimension, "elbo: batch dimension does not match model");
  const int C = model.C;
  if (y_batch.minCoeff() < 0 || y_batch.maxCoeff() >= C)
    throw Error(ErrorCode::invalid_argument, "elbo: class index out of range");

  const Eigen::Index m = model.inducing_count();
  const int L = model.latent_count();

  Tape t;

  // parameter leaves, in pack_params order
  std::vector<LeafVars> slot_leaves(model.kernels.size());
  for (size_t s = 0; s < model.kernels.size(); ++s) {
    for_each_elementary(model.kernels[s], [&](const KernelSpec& leaf) {
      slot_leaves[s].push_back({t.input(Matrix::Constant(1, 1, std::log(leaf.lengthscale))),
                                t.input(Matrix::Constant(1, 1, std::log(leaf.variance)))});
    });
  }
  const Var Zv = t.input(model.inducing.Z);
  std::vector<Var> means(static_cast<size_t>(L)), packs(static_cast<size_t>(L));
  for (int c = 0; c < L; ++c) {
    const auto& q = model.q_u[static_cast<size_t>(c)];
    means[static_cast<size_t>(c)] = t.input(q.mean);
    Vector packed(m * (m + 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j <= i; ++j, ++k)
        packed[k] = (i == j) ? std::log(q.scale(i, j)) : q.scale(i, j);
    packs[static_cast<size_t>(c)] = t.input(packed);
  }
  const bool train_delta = model.noise.has_value() && model.noise->trainable_delta();
  Var rho;
  Var delta;
  if (model.noise.has_value()) {
    if (train_delta) {
      rho = t.input(Matrix::Constant(1, 1, model.noise->rho()));
      delta = t.scale(t.sigmoid(rho), model.noise->delta_max());
    } else {
      delta = t.constant_scalar(model.noise->delta());
    }
  }

  const Var Xc = t.constant(X_batch);

  std::vector<SlotGraph> slots;
  slots.reserve(model.kernels.size());
  for (size_t s = 0; s < model.kernels.size(); ++s)
    slots.push_back(build_slot(t, model.kernels[s], slot_leaves[s], Zv, Xc, m, nb));

  std::vector<LatentGraph> latents;
  latents.reserve(static_cast<size_t>(L));
  Var kl_total;
  for (int c = 0; c < L; ++c) {
    const SlotGraph& s = slots[model.shared_kernel ? 0 : static_cast<size_t>(c)];
    latents.push_back(build_latent(t, s, means[static_cast<size_t>(c)],
                                   packs[static_cast<size_t>(c)], m));
    kl_total = (c == 0) ? latents.back().kl : t.add(kl_total, latents.back().kl);
  }

  // data term
  Var data_raw;
  switch (model.task) {
    case Task::Binary: {
      Vector ysign(nb);
      for (Eigen::Index i = 0; i < nb; ++i) ysign[i] = y_batch[i] == 1 ? 1.0 : -1.0;
      const Var yv = t.constant(ysign);
      const double a = model.noise->a();
      const Var denom = t.vsqrt(t.shift(latents[0].var, a));
      const Var phi = t.normal_cdf(t.div(t.mul(yv, latents[0].mu), denom));
      // log((1-d)/d) * sum Phi + n log d
      const Var c1 = t.sub(t.vlog1p(t.neg(delta)), t.vlog(delta));
      data_raw = t.add(t.mul(c1, t.sum(phi)),
                       t.smul(t.vlog(delta), t.constant_scalar(static_cast<double>(nb))));
      break;
    }
    case Task::MulticlassUnified: {
      const double a = model.noise->a();
      // per-class one-hot selectors as constants
      std::vector<Var> onehot(static_cast<size_t>(C)), exclude(static_cast<size_t>(C));
      for (int c = 0; c < C; ++c) {
        Vector oh = Vector::Zero(nb);
        for (Eigen::Index i = 0; i < nb; ++i) oh[i] = y_batch[i] == c ? 1.0 : 0.0;
        onehot[static_cast<size_t>(c)] = t.constant(oh);
        exclude[static_cast<size_t>(c)] = t.constant((1.0 - oh.array()).matrix());
      }
      // observed-class marginals via one-hot sums
      Var mu_y, var_y;
      for (int c = 0; c < C; ++c) {
        const Var mc = t.mul(latents[static_cast<size_t>(c)].mu, onehot[static_cast<size_t>(c)]);
        const Var vc = t.mul(latents[static_cast<size_t>(c)].var, onehot[static_cast<size_t>(c)]);
        mu_y = (c == 0) ? mc : t.add(mu_y, mc);
        var_y = (c == 0) ? vc : t.add(var_y, vc);
      }
      const Var spread = t.vsqrt(t.scale(t.shift(var_y, a), 2.0));  // sqrt(2 (a + var_y))
      std::vector<Var> denom(static_cast<size_t>(C));
      for (int c = 0; c < C; ++c)
        denom[static_cast<size_t>(c)] = t.vsqrt(t.shift(latents[static_cast<size_t>(c)].var, a));

      // S_i by Gauss-Hermite over the observed-class latent
      Var S;
      constexpr double inv_sqrt_pi = 0.5641895835477562869;
      for (int k = 0; k < rule.order; ++k) {
        const Var g = t.add(mu_y, t.scale(spread, rule.nodes[k]));
        Var logprod;
        for (int c = 0; c < C; ++c) {
          const Var z = t.div(t.sub(g, latents[static_cast<size_t>(c)].mu),
                              denom[static_cast<size_t>(c)]);
          const Var lp = t.mul(t.log_normal_cdf(z), exclude[static_cast<size_t>(c)]);
          logprod = (c == 0) ? lp : t.add(logprod, lp);
        }
        const Var contrib = t.scale(t.vexp(logprod), rule.weights[k] * inv_sqrt_pi);
        S = (k == 0) ? contrib : t.add(S, contrib);
      }
      // log(1-d) sum S + log(d/(C-1)) (n - sum S)
      const Var sum_s = t.sum(S);
      const Var c_pos = t.vlog1p(t.neg(delta));
      const Var c_neg = t.shift(t.vlog(delta), -std::log(C - 1.0));
      data_raw = t.add(t.mul(c_pos, sum_s),
                       t.mul(c_neg, t.sub(t.constant_scalar(static_cast<double>(nb)), sum_s)));
      break;
    }
    case Task::Softmax: {
      // logP = var_y/2 - mu_y + logsumexp_{c != y}(var_c/2 + mu_c);
      // the rowwise max stabilizer is detached (exactly cancels in value
      // and gradient)
      std::vector<Var> A(static_cast<size_t>(C));
      for (int c = 0; c < C; ++c)
        A[static_cast<size_t>(c)] = t.add(t.scale(latents[static_cast<size_t>(c)].var, 0.5),
                                          latents[static_cast<size_t>(c)].mu);
      Vector mx = Vector::Constant(nb, -std::numeric_limits<double>::infinity());
      for (int c = 0; c < C; ++c) {
        const Matrix& av = t.val(A[static_cast<size_t>(c)]);
        for (Eigen::Index i = 0; i < nb; ++i)
          if (y_batch[i] != c) mx[i] = std::max(mx[i], av(i, 0));
      }
      const Var mxv = t.constant(mx);
      Var srow;
      for (int c = 0; c < C; ++c) {
        Vector excl(nb);
        for (Eigen::Index i = 0; i < nb; ++i) excl[i] = y_batch[i] == c ? 0.0 : 1.0;
        const Var ex = t.constant(excl);
        const Var e = t.mul(t.vexp(t.mul(t.sub(A[static_cast<size_t>(c)], mxv), ex)), ex);
        srow = (c == 0) ? e : t.add(srow, e);
      }
      const Var lse = t.add(t.vlog(srow), mxv);
      Var mu_y, Ay;
      for (int c = 0; c < C; ++c) {
        Vector oh(nb);
        for (Eigen::Index i = 0; i < nb; ++i) oh[i] = y_batch[i] == c ? 1.0 : 0.0;
        const Var ohv = t.constant(oh);
        const Var mc = t.mul(latents[static_cast<size_t>(c)].mu, ohv);
        const Var ac = t.mul(A[static_cast<size_t>(c)], ohv);
        mu_y = (c == 0) ? mc : t.add(mu_y, mc);
        Ay = (c == 0) ? ac : t.add(Ay, ac);
      }
      // var_y/2 - mu_y = A_y - 2 mu_y
      const Var logP = t.add(t.sub(Ay, t.scale(mu_y, 2.0)), lse);
      data_raw = t.neg(t.sum(t.softplus(logP)));  // sum of -log(1 + P)
      break;
    }
  }

  const double scaling = static_cast<double>(model.n_total) / static_cast<double>(nb);
  const Var data_scaled = t.scale(data_raw, scaling);
  const Var bound = t.sub(data_scaled, kl_total);

  ElboResult res;
  res.value = t.scalar(bound);
  res.data_term = t.scalar(data_scaled);
  res.kl_total = t.scalar(kl_total);

  if (grad) {
    t.backward(bound);
    const ParamLayout layout = param_layout(model);
    grad->resize(layout.total);
    Eigen::Index k = 0;
    for (size_t s = 0; s < model.kernels.size(); ++s) {
      for (const auto& pair : slot_leaves[s]) {
        (*grad)[k++] = t.adjoint(pair[0])(0, 0);
        (*grad)[k++] = t.adjoint(pair[1])(0, 0);
      }
    }
    const Matrix& zbar = t.adjoint(Zv);
    for (Eigen::Index i = 0; i < zbar.rows(); ++i)
      for (Eigen::Index j = 0; j < zbar.cols(); ++j) (*grad)[k++] = zbar(i, j);
    for (int c = 0; c < L; ++c) {
      const Matrix& mbar = t.adjoint(means[static_cast<size_t>(c)]);
      for (Eigen::Index i = 0; i < mbar.rows(); ++i) (*grad)[k++] = mbar(i, 0);
      const Matrix& pbar = t.adjoint(packs[static_cast<size_t>(c)]);
      for (Eigen::Index i = 0; i < pbar.rows(); ++i) (*grad)[k++] = pbar(i, 0);
    }
    if (train_delta) (*grad)[k++] = t.adjoint(rho)(0, 0);
  }
  return res;
}

}  // namespace svgpc::detail
