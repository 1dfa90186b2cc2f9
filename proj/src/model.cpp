#include "model.hpp"

#include "model_internal.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace svgpc {

const char* task_name(Task t) {
  switch (t) {
    case Task::Binary: return "binary";
    case Task::MulticlassUnified: return "multiclass";
    case Task::Softmax: return "softmax";
  }
  return "unknown";
}

Task task_from_name(const std::string& name) {
  if (name == "binary") return Task::Binary;
  if (name == "multiclass") return Task::MulticlassUnified;
  if (name == "softmax") return Task::Softmax;
  throw Error(ErrorCode::invalid_argument, "unknown task: " + name);
}

namespace detail {

void for_each_elementary(const KernelSpec& spec,
                         const std::function<void(const KernelSpec&)>& fn) {
  if (spec.family == KernelFamily::Sum) {
    for (const auto& c : spec.children) for_each_elementary(c, fn);
  } else {
    fn(spec);
  }
}

void for_each_elementary_mut(KernelSpec& spec, const std::function<void(KernelSpec&)>& fn) {
  if (spec.family == KernelFamily::Sum) {
    for (auto& c : spec.children) for_each_elementary_mut(c, fn);
  } else {
    fn(spec);
  }
}

}  // namespace detail

void ModelState::validate() const {
  if (task == Task::Binary) {
    if (C != 2) throw Error(ErrorCode::invalid_argument, "binary model requires C == 2");
  } else {
    if (C < 3)
      throw Error(ErrorCode::invalid_argument,
                  "multi-class model requires C >= 3 (C == 2 is routed to binary)");
  }
  if (task == Task::Softmax) {
    if (noise.has_value())
      throw Error(ErrorCode::invalid_argument, "softmax model carries no noise family");
  } else if (!noise.has_value()) {
    throw Error(ErrorCode::invalid_argument, "unified model requires a noise family");
  }
  const size_t slots = shared_kernel ? 1 : static_cast<size_t>(latent_count());
  if (kernels.size() != slots)
    throw Error(ErrorCode::invalid_argument, "kernel slot count does not match sharing mode");
  for (const auto& k : kernels) validate_kernel(k);
  if (inducing.Z.rows() < 1) throw Error(ErrorCode::invalid_argument, "need at least 1 inducing point");
  if (q_u.size() != static_cast<size_t>(latent_count()))
    throw Error(ErrorCode::invalid_argument, "variational slot count does not match latent count");
  const Eigen::Index m = inducing.Z.rows();
  for (const auto& q : q_u) {
    if (q.mean.size() != m || q.scale.rows() != m || q.scale.cols() != m)
      throw Error(ErrorCode::dimension, "variational sizes do not match inducing count");
    if (q.scale.diagonal().minCoeff() <= 0.0)
      throw Error(ErrorCode::invalid_argument, "variational scale diagonal must be positive");
  }
  if (n_total < 1) throw Error(ErrorCode::invalid_argument, "n_total must be >= 1");
}

void TrainConfig::validate(Eigen::Index n_total) const {
  if (iterations < 0) throw Error(ErrorCode::invalid_argument, "iterations must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::invalid_argument, "batch_size must be >= 1");
  (void)n_total;  // batches larger than the dataset fall back to full batch
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::invalid_argument, "learning_rate must be > 0");
  if (quadrature_order < 1 || quadrature_order > 128)
    throw Error(ErrorCode::invalid_argument, "quadrature_order must be in [1, 128]");
  if (trace_every < 1) throw Error(ErrorCode::invalid_argument, "trace_every must be >= 1");
}

// --- parameter packing ------------------------------------------------------

namespace {

Eigen::Index packed_scale_size(Eigen::Index m) { return m * (m + 1) / 2; }

}  // namespace

ParamLayout param_layout(const ModelState& model) {
  ParamLayout layout;
  Eigen::Index off = 0;
  auto add = [&](const std::string& name, Eigen::Index size) {
    layout.segments.push_back({name, off, size});
    off += size;
  };
  for (size_t s = 0; s < model.kernels.size(); ++s) {
    int leaf = 0;
    detail::for_each_elementary(model.kernels[s], [&](const KernelSpec&) {
      const std::string base = "kernel" + std::to_string(s) + ".leaf" + std::to_string(leaf);
      add(base + ".log_lengthscale", 1);
      add(base + ".log_variance", 1);
      ++leaf;
    });
  }
  add("inducing.Z", model.inducing.Z.size());
  const Eigen::Index m = model.inducing_count();
  for (int c = 0; c < model.latent_count(); ++c) {
    add("q" + std::to_string(c) + ".mean", m);
    add("q" + std::to_string(c) + ".scale_packed", packed_scale_size(m));
  }
  if (model.noise.has_value() && model.noise->trainable_delta()) add("delta.rho", 1);
  layout.total = off;
  return layout;
}

Vector pack_params(const ModelState& model) {
  const ParamLayout layout = param_layout(model);
  Vector theta(layout.total);
  Eigen::Index k = 0;
  for (const auto& spec : model.kernels) {
    detail::for_each_elementary(spec, [&](const KernelSpec& leaf) {
      theta[k++] = std::log(leaf.lengthscale);
      theta[k++] = std::log(leaf.variance);
    });
  }
  const auto& Z = model.inducing.Z;
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) theta[k++] = Z(i, j);
  for (const auto& q : model.q_u) {
    for (Eigen::Index i = 0; i < q.mean.size(); ++i) theta[k++] = q.mean[i];
    for (Eigen::Index i = 0; i < q.scale.rows(); ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        theta[k++] = (i == j) ? std::log(q.scale(i, j)) : q.scale(i, j);
  }
  if (model.noise.has_value() && model.noise->trainable_delta()) theta[k++] = model.noise->rho();
  return theta;
}

void unpack_params(const Vector& theta, ModelState& model) {
  const ParamLayout layout = param_layout(model);
  if (theta.size() != layout.total)
    throw Error(ErrorCode::dimension, "unpack_params: parameter vector size mismatch");
  Eigen::Index k = 0;
  for (auto& spec : model.kernels) {
    detail::for_each_elementary_mut(spec, [&](KernelSpec& leaf) {
      leaf.lengthscale = std::exp(theta[k++]);
      leaf.variance = std::exp(theta[k++]);
    });
  }
  auto& Z = model.inducing.Z;
  for (Eigen::Index i = 0; i < Z.rows(); ++i)
    for (Eigen::Index j = 0; j < Z.cols(); ++j) Z(i, j) = theta[k++];
  for (auto& q : model.q_u) {
    for (Eigen::Index i = 0; i < q.mean.size(); ++i) q.mean[i] = theta[k++];
    for (Eigen::Index i = 0; i < q.scale.rows(); ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        q.scale(i, j) = (i == j) ? std::exp(theta[k]) : theta[k];
        ++k;
      }
    }
  }
  if (model.noise.has_value() && model.noise->trainable_delta()) model.noise->set_rho(theta[k++]);
}

// --- ELBO driver --------------------------------------------------------------

double elbo(const ModelState& model, const Matrix& X_batch, const Eigen::VectorXi& y_batch,
            const GaussHermiteRule& rule) {
  return detail::elbo_eval(model, X_batch, y_batch, rule, nullptr).value;
}

double elbo_grad(const ModelState& model, const Matrix& X_batch, const Eigen::VectorXi& y_batch,
                 const GaussHermiteRule& rule, Vector& grad) {
  return detail::elbo_eval(model, X_batch, y_batch, rule, &grad).value;
}

ElboParts elbo_parts(const ModelState& model, const Matrix& X_batch,
                     const Eigen::VectorXi& y_batch, const GaussHermiteRule& rule) {
  const auto r = detail::elbo_eval(model, X_batch, y_batch, rule, nullptr);
  return {r.data_term, r.kl_total};
}

// --- optimizer -----------------------------------------------------------------

void adam_step(Vector& params, const Vector& grad, AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grad.size())
    throw Error(ErrorCode::dimension, "adam_step: size mismatch");
  if (state.m.size() != params.size()) {
    state.m = Vector::Zero(params.size());
    state.v = Vector::Zero(params.size());
    state.t = 0;
  }
  ++state.t;
  state.m = cfg.adam_beta1 * state.m + (1.0 - cfg.adam_beta1) * grad;
  state.v = cfg.adam_beta2 * state.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, state.t);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, state.t);
  const Vector mhat = state.m / bc1;
  const Vector vhat = state.v / bc2;
  params += cfg.learning_rate * (mhat.array() / (vhat.array().sqrt() + cfg.adam_eps)).matrix();
}

// --- model construction -----------------------------------------------------

InducingSet init_inducing(const Matrix& X, int m, std::uint64_t seed) {
  if (m < 1 || m > X.rows())
    throw Error(ErrorCode::invalid_argument, "init_inducing: need 1 <= m <= n");
  return InducingSet{kmeans(X, m, seed)};
}

ModelState init_model(const Dataset& data, const ModelInit& init) {
  if (data.n() < 1) throw Error(ErrorCode::invalid_argument, "init_model: empty dataset");

  ModelState model;
  model.C = data.C;
  model.n_total = data.n();

  const bool softmax = init.likelihood == "softmax";
  if (softmax) {
    if (init.noise_a.has_value())
      throw Error(ErrorCode::invalid_argument, "softmax likelihood takes no noise variance");
    if (data.C < 3)
      throw Error(ErrorCode::invalid_argument,
                  "softmax likelihood requires multi-class data (C >= 3)");
    model.task = Task::Softmax;
  } else {
    double a = 0.0;
    if (init.likelihood == "step")
      a = 0.0;
    else if (init.likelihood == "probit")
      a = 1.0;
    else if (init.likelihood == "logit")
      a = kLogitNoiseVariance;
    else
      throw Error(ErrorCode::invalid_argument, "unknown likelihood: " + init.likelihood);
    if (init.noise_a.has_value()) {
      if (*init.noise_a < 0.0)
        throw Error(ErrorCode::invalid_argument, "noise variance a must be >= 0");
      a = *init.noise_a;
    }
    model.task = data.C == 2 ? Task::Binary : Task::MulticlassUnified;
    if (init.train_delta && !(init.delta_init > 0.0))
      throw Error(ErrorCode::invalid_argument, "training delta requires delta_init > 0");
    model.noise = NoiseFamily(a, init.delta_init, NoiseFamily::delta_max_for(data.C),
                              init.train_delta);
  }

  KernelSpec kernel = init.kernel;
  const double default_ls = 0.1 * std::sqrt(static_cast<double>(data.dim()));
  detail::for_each_elementary_mut(kernel, [&](KernelSpec& leaf) {
    if (leaf.lengthscale <= 0.0) leaf.lengthscale = default_ls;
    if (leaf.variance <= 0.0) leaf.variance = 5.0;
  });
  validate_kernel(kernel);

  model.shared_kernel = !init.kernel_per_class;
  const int slots = model.shared_kernel ? 1 : model.latent_count();
  model.kernels.assign(static_cast<size_t>(slots), kernel);

  const int m = std::min<int>(init.m, static_cast<int>(data.n()));
  model.inducing = init_inducing(data.X, m, init.seed);

  const CholeskyFactor kf =
      cholesky_jitter(kernel_matrix(model.kernel_for(0), model.inducing.Z, model.inducing.Z));
  GaussianVariational q;
  q.mean = Vector::Zero(m);
  q.scale = 0.1 * kf.lower;
  model.q_u.assign(static_cast<size_t>(model.latent_count()), q);

  model.validate();
  return model;
}

// --- training loop ----------------------------------------------------------

namespace {

Eigen::VectorXi class_indices(const Dataset& data) {
  Eigen::VectorXi out(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) out[i] = data.class_index(i);
  return out;
}

[[noreturn]] void abort_nonfinite(const detail::ElboResult& r, int iteration) {
  std::ostringstream oss;
  oss << "non-finite ELBO at iteration " << iteration << " (data term = " << r.data_term
      << ", KL = " << r.kl_total << "); check kernel conditioning and learning rate";
  throw Error(ErrorCode::numeric, oss.str());
}

}  // namespace

TrainTrace fit(ModelState& model, const Dataset& data, const TrainConfig& cfg) {
  model.validate();
  cfg.validate(data.n());
  if (data.n() < 1) throw Error(ErrorCode::invalid_argument, "fit: empty dataset");
  if (data.C != model.C)
    throw Error(ErrorCode::invalid_argument, "fit: dataset class count does not match model");
  if (data.dim() != model.inducing.Z.cols())
    throw Error(ErrorCode::dimension, "fit: dataset dimension does not match model");

  const GaussHermiteRule rule = gauss_hermite(cfg.quadrature_order);
  const Eigen::VectorXi all_y = class_indices(data);
  const Eigen::Index n = data.n();
  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  const bool full_batch = batch == n;

  Vector theta = pack_params(model);
  AdamState adam;
  Rng batch_rng(cfg.seed, /*stream=*/0x6261746368ULL);

  std::vector<Eigen::Index> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Eigen::Index cursor = n;  // forces an initial shuffle in minibatch mode

  Matrix Xb;
  Eigen::VectorXi yb;
  auto draw_batch = [&]() {
    if (full_batch) {
      Xb = data.X;
      yb = all_y;
      return;
    }
    if (cursor + batch > n) {
      for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<size_t>(i)],
                  perm[static_cast<size_t>(batch_rng.uniform_int(static_cast<std::uint64_t>(i) + 1))]);
      cursor = 0;
    }
    Xb.resize(batch, data.dim());
    yb.resize(batch);
    for (Eigen::Index i = 0; i < batch; ++i) {
      const Eigen::Index src = perm[static_cast<size_t>(cursor + i)];
      Xb.row(i) = data.X.row(src);
      yb[i] = all_y[src];
    }
    cursor += batch;
  };

  TrainTrace trace;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  auto record = [&](int iteration, double value, double grad_norm) {
    const double delta = model.noise.has_value() ? model.noise->delta() : 0.0;
    trace.push_back({iteration, value, elapsed(), delta, grad_norm});
  };

  Vector grad;
  for (int it = 0; it < cfg.iterations; ++it) {
    draw_batch();
    const auto r = detail::elbo_eval(model, Xb, yb, rule, &grad);
    if (!std::isfinite(r.value)) abort_nonfinite(r, it);
    if (it % cfg.trace_every == 0) record(it, r.value, grad.norm());

    if (cfg.optimizer == TrainConfig::Optimizer::Adam)
      adam_step(theta, grad, adam, cfg);
    else
      theta += cfg.learning_rate * grad;
    unpack_params(theta, model);
  }

  // closing record at the final parameters
  draw_batch();
  const auto r = detail::elbo_eval(model, Xb, yb, rule, &grad);
  if (!std::isfinite(r.value)) abort_nonfinite(r, cfg.iterations);
  if (trace.empty() || trace.back().iteration != cfg.iterations)
    record(cfg.iterations, r.value, grad.norm());
  return trace;
}

// --- prediction -----------------------------------------------------------------

Prediction predict(const ModelState& model, const Matrix& X_star, int n_samples,
                   std::uint64_t seed, int quadrature_order) {
  model.validate();
  if (X_star.cols() != model.inducing.Z.cols())
    throw Error(ErrorCode::dimension, "predict: input dimension does not match model");
  const Eigen::Index n = X_star.rows();
  const int L = model.latent_count();

  Prediction out;
  out.marginals.mu.resize(n, L);
  out.marginals.var.resize(n, L);
  for (int c = 0; c < L; ++c) {
    Vector mu, var;
    q_f_marginals(model.kernel_for(c), model.inducing, model.q_u[static_cast<size_t>(c)], X_star,
                  mu, var);
    out.marginals.mu.col(c) = mu;
    out.marginals.var.col(c) = var;
  }

  out.probs.resize(n, model.C);
  switch (model.task) {
    case Task::Binary: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double p =
            binary_predict(out.marginals.mu(i, 0), out.marginals.var(i, 0), *model.noise);
        out.probs(i, 0) = 1.0 - p;
        out.probs(i, 1) = p;
      }
      break;
    }
    case Task::MulticlassUnified: {
      const GaussHermiteRule rule = gauss_hermite(quadrature_order);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector p = multiclass_predict(out.marginals.mu.row(i).transpose(),
                                            out.marginals.var.row(i).transpose(), *model.noise,
                                            rule);
        out.probs.row(i) = p.transpose();
      }
      break;
    }
    case Task::Softmax: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const Vector p = softmax_predict_mc(out.marginals.mu.row(i).transpose(),
                                            out.marginals.var.row(i).transpose(), n_samples, seed,
                                            static_cast<std::uint64_t>(i));
        out.probs.row(i) = p.transpose();
      }
      break;
    }
  }
  return out;
}

// --- metrics -----------------------------------------------------------------

EvalReport evaluate_metrics(const Matrix& probs, const Eigen::VectorXi& y_class_index, int C) {
  const Eigen::Index n = probs.rows();
  if (n != y_class_index.size() || probs.cols() != C)
    throw Error(ErrorCode::dimension, "evaluate_metrics: shape mismatch");
  EvalReport rep;
  rep.n_test = n;
  rep.confusion = Eigen::MatrixXi::Zero(C, C);
  double nll = 0.0;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index pred;
    probs.row(i).maxCoeff(&pred);
    const int truth = y_class_index[i];
    if (truth < 0 || truth >= C)
      throw Error(ErrorCode::invalid_argument, "evaluate_metrics: label out of range");
    rep.confusion(truth, pred) += 1;
    correct += (pred == truth);
    nll -= std::log(std::max(probs(i, truth), 1e-300));
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  rep.mean_nll = nll / static_cast<double>(n);
  return rep;
}

}  // namespace svgpc
