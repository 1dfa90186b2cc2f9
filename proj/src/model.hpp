#pragma once

#include "common.hpp"
#include "dataset.hpp"
#include "kernels.hpp"
#include "likelihood_softmax.hpp"
#include "likelihood_unified.hpp"
#include "variational.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svgpc {

enum class Task { Binary, MulticlassUnified, Softmax };

const char* task_name(Task t);
Task task_from_name(const std::string& name);

// Full trainable state of a classifier: per-latent GP priors, shared
// inducing locations, per-latent Gaussian variational posteriors, and the
// likelihood configuration. Binary models carry one latent process;
// multi-class models carry C of them.
struct ModelState {
  Task task = Task::Binary;
  int C = 2;
  std::vector<KernelSpec> kernels;  // size 1 when shared_kernel, else one per latent
  bool shared_kernel = true;
  InducingSet inducing;
  std::vector<GaussianVariational> q_u;
  std::optional<NoiseFamily> noise;  // absent for softmax
  Eigen::Index n_total = 0;

  int latent_count() const { return task == Task::Binary ? 1 : C; }
  const KernelSpec& kernel_for(int latent) const {
    return kernels[shared_kernel ? 0 : static_cast<size_t>(latent)];
  }
  KernelSpec& kernel_for(int latent) {
    return kernels[shared_kernel ? 0 : static_cast<size_t>(latent)];
  }
  Eigen::Index inducing_count() const { return inducing.Z.rows(); }

  void validate() const;
};

struct TrainConfig {
  int iterations = 5000;
  int batch_size = 1024;
  double learning_rate = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int quadrature_order = 20;
  int trace_every = 100;
  enum class Optimizer { Adam, GradientAscent } optimizer = Optimizer::Adam;

  void validate(Eigen::Index n_total) const;
};

struct TraceRecord {
  int iteration = 0;
  double elbo = 0.0;
  double wall_seconds = 0.0;
  double delta = 0.0;  // 0 for softmax models (no robust parameter)
  double grad_norm = 0.0;
};
using TrainTrace = std::vector<TraceRecord>;

// --- unconstrained parameter vector -------------------------------------
//
// Layout, in order:
//   per kernel slot, per elementary kernel: log(lengthscale), log(variance)
//   inducing locations Z, row-major
//   per latent: q(u) mean, then the scale's lower triangle packed row-major
//     with log-diagonal
//   rho (delta = delta_max * sigmoid(rho)) when the likelihood trains delta

struct ParamSegment {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

struct ParamLayout {
  std::vector<ParamSegment> segments;
  Eigen::Index total = 0;
};

ParamLayout param_layout(const ModelState& model);
Vector pack_params(const ModelState& model);
void unpack_params(const Vector& theta, ModelState& model);

// --- ELBO and gradients ---------------------------------------------------

// Minibatch estimate (n_total / batch) * sum of per-point bound terms
// minus the Gaussian KL terms; the full batch reproduces the exact bound.
// y_batch holds class indices in [0, C).
double elbo(const ModelState& model, const Matrix& X_batch, const Eigen::VectorXi& y_batch,
            const GaussHermiteRule& rule);

// Value and exact gradient with respect to the packed parameter vector.
double elbo_grad(const ModelState& model, const Matrix& X_batch, const Eigen::VectorXi& y_batch,
                 const GaussHermiteRule& rule, Vector& grad);

// Breakdown used by tests and non-finite diagnostics.
struct ElboParts {
  double data_term = 0.0;  // already scaled by n_total / batch
  double kl_total = 0.0;
  double value() const { return data_term - kl_total; }
};
ElboParts elbo_parts(const ModelState& model, const Matrix& X_batch,
                     const Eigen::VectorXi& y_batch, const GaussHermiteRule& rule);

// --- optimizer --------------------------------------------------------------

struct AdamState {
  Vector m;
  Vector v;
  int t = 0;
};

// One Adam ascent step with bias correction (maximizes the objective).
void adam_step(Vector& params, const Vector& grad, AdamState& state, const TrainConfig& cfg);

// --- training and prediction ------------------------------------------------

InducingSet init_inducing(const Matrix& X, int m, std::uint64_t seed);

// Builds a ModelState for a dataset: task resolution (C == 2 with a
// unified likelihood is routed to Binary), kernel defaults
// (lengthscale 0.1 sqrt(d), variance 5.0 unless given), k-means inducing
// initialization, q(u) mean 0 and scale 0.1 chol(K_mm).
struct ModelInit {
  std::string likelihood = "probit";   // step | probit | logit | softmax
  std::optional<double> noise_a;       // explicit a overriding the named value
  double delta_init = 1e-3;
  bool train_delta = true;
  KernelSpec kernel = KernelSpec::rbf(0.0, 5.0);  // lengthscale 0 -> 0.1 sqrt(d)
  bool kernel_per_class = false;
  int m = 32;
  std::uint64_t seed = 0;
};
ModelState init_model(const Dataset& data, const ModelInit& init);

// Minibatch Adam (or plain gradient ascent) loop; aborts with a diagnostic
// on a non-finite ELBO. Deterministic for fixed (seed, config, dataset).
TrainTrace fit(ModelState& model, const Dataset& data, const TrainConfig& cfg);

struct Prediction {
  Matrix probs;  // n x C
  PredictiveMarginals marginals;
};

Prediction predict(const ModelState& model, const Matrix& X_star, int n_samples,
                   std::uint64_t seed, int quadrature_order = 20);

// --- evaluation ---------------------------------------------------------------

struct EvalReport {
  double accuracy = 0.0;
  double mean_nll = 0.0;
  Eigen::Index n_test = 0;
  Eigen::MatrixXi confusion;  // true class x predicted class
  double runtime_seconds = 0.0;
  std::uint64_t seed = 0;
};

EvalReport evaluate_metrics(const Matrix& probs, const Eigen::VectorXi& y_class_index, int C);

// --- checkpoints ------------------------------------------------------------
//
// Self-describing JSON checkpoint; save -> load -> save is byte-identical.

void save_checkpoint(const ModelState& model, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& config_echo,
                     const std::optional<Normalization>& norm,
                     const std::vector<double>& label_map, std::uint64_t seed);

struct Checkpoint {
  ModelState model;
  std::optional<Normalization> normalization;
  std::vector<double> label_map;
  std::vector<std::pair<std::string, std::string>> config_echo;
  std::uint64_t seed = 0;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace svgpc
