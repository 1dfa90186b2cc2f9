#include "svgpc/svgpc.h"

#include "config.hpp"
#include "dataset.hpp"
#include "model.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

using namespace svgpc;

struct svgpc_dataset {
  Dataset ds;
};

struct svgpc_model {
  Checkpoint ck;
};

namespace {

thread_local std::string g_last_error = "";

int set_error(ErrorCode code, const std::string& msg) {
  g_last_error = msg;
  switch (code) {
    case ErrorCode::invalid_argument: return SVGPC_ERROR_INVALID_ARGUMENT;
    case ErrorCode::io: return SVGPC_ERROR_IO;
    case ErrorCode::parse: return SVGPC_ERROR_PARSE;
    case ErrorCode::numeric: return SVGPC_ERROR_NUMERIC;
    case ErrorCode::dimension: return SVGPC_ERROR_DIMENSION;
  }
  return SVGPC_ERROR_INTERNAL;
}

// runs fn, translating exceptions into status codes
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return SVGPC_OK;
  } catch (const Error& e) {
    return set_error(e.code(), e.what());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SVGPC_ERROR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return SVGPC_ERROR_INTERNAL;
  }
}

void require(bool cond, const char* msg) {
  if (!cond) throw Error(ErrorCode::invalid_argument, msg);
}

std::vector<std::string> split_lines(const char* text) {
  std::vector<std::string> out;
  if (!text) return out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

// class indices of a test dataset under the model's label map
Eigen::VectorXi reconcile_labels(const Checkpoint& ck, const Dataset& ds) {
  Eigen::VectorXi out(ds.n());
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    const double value = ds.label_map.empty()
                             ? static_cast<double>(ds.y[i])
                             : ds.label_map[static_cast<size_t>(ds.class_index(i))];
    int cls = -1;
    for (size_t c = 0; c < ck.label_map.size(); ++c) {
      if (ck.label_map[c] == value) {
        cls = static_cast<int>(c);
        break;
      }
    }
    if (cls < 0)
      throw Error(ErrorCode::invalid_argument,
                  "dataset label " + std::to_string(value) + " unknown to the checkpoint");
    out[i] = cls;
  }
  return out;
}

Matrix to_model_space(const Checkpoint& ck, const Matrix& X) {
  if (!ck.normalization.has_value()) return X;
  Dataset tmp;
  tmp.X = X;
  tmp.y = Eigen::VectorXi::Zero(X.rows());
  return apply_normalization(tmp, *ck.normalization).X;
}

void write_trace_csv(const TrainTrace& trace, const std::string& path,
                     const FlatConfig& resolved) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  for (const auto& [k, v] : resolved.items()) out << "# " << k << " = " << v << "\n";
  out << "iteration,elbo,wall_seconds,delta,grad_norm\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.6f,%.17g,%.17g\n", r.iteration, r.elbo,
                  r.wall_seconds, r.delta, r.grad_norm);
    out << buf;
  }
  if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

}  // namespace

extern "C" {

const char* svgpc_last_error(void) { return g_last_error.c_str(); }

const char* svgpc_status_name(int status) {
  switch (status) {
    case SVGPC_OK: return "ok";
    case SVGPC_ERROR_INVALID_ARGUMENT: return "invalid-argument";
    case SVGPC_ERROR_IO: return "io";
    case SVGPC_ERROR_PARSE: return "parse";
    case SVGPC_ERROR_NUMERIC: return "numeric";
    case SVGPC_ERROR_DIMENSION: return "dimension";
    default: return "internal";
  }
}

const char* svgpc_version(void) { return "1.0.0"; }

int svgpc_dataset_load_csv(const char* path, int label_column, svgpc_dataset** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto handle = std::make_unique<svgpc_dataset>();
    handle->ds = load_csv(path, label_column);
    *out = handle.release();
  });
}

int svgpc_dataset_save_csv(const svgpc_dataset* ds, const char* path,
                           const char* header_comment) {
  return guarded([&] {
    require(ds && path, "null argument");
    save_csv(ds->ds, path, split_lines(header_comment));
  });
}

int svgpc_dataset_gen_two_moons(long n, double noise, unsigned long long seed,
                                svgpc_dataset** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    auto handle = std::make_unique<svgpc_dataset>();
    handle->ds = gen_two_cluster_binary(static_cast<int>(n), noise, seed);
    *out = handle.release();
  });
}

int svgpc_dataset_gen_gp_multiclass(long n, int classes, const char* kernel,
                                    const char* lengthscale, const char* variance,
                                    unsigned long long seed, svgpc_dataset** out) {
  return guarded([&] {
    require(out && kernel && lengthscale && variance, "null argument");
    const KernelSpec spec = kernel_from_config(kernel, lengthscale, variance);
    auto handle = std::make_unique<svgpc_dataset>();
    handle->ds = gen_gp_multiclass(static_cast<int>(n), classes, spec, seed).dataset;
    *out = handle.release();
  });
}

int svgpc_dataset_rows(const svgpc_dataset* ds, long* out) {
  return guarded([&] {
    require(ds && out, "null argument");
    *out = static_cast<long>(ds->ds.n());
  });
}

int svgpc_dataset_cols(const svgpc_dataset* ds, long* out) {
  return guarded([&] {
    require(ds && out, "null argument");
    *out = static_cast<long>(ds->ds.dim());
  });
}

int svgpc_dataset_classes(const svgpc_dataset* ds, int* out) {
  return guarded([&] {
    require(ds && out, "null argument");
    *out = ds->ds.C;
  });
}

int svgpc_dataset_split(const svgpc_dataset* ds, double test_fraction, unsigned long long seed,
                        int stratified, svgpc_dataset** train_out, svgpc_dataset** test_out) {
  return guarded([&] {
    require(ds && train_out && test_out, "null argument");
    auto result = split(ds->ds, test_fraction, seed, stratified != 0);
    auto train = std::make_unique<svgpc_dataset>();
    auto test = std::make_unique<svgpc_dataset>();
    train->ds = std::move(result.train);
    test->ds = std::move(result.test);
    *train_out = train.release();
    *test_out = test.release();
  });
}

void svgpc_dataset_free(svgpc_dataset* ds) { delete ds; }

int svgpc_train(const char* config_text, const svgpc_dataset* data, const char* checkpoint_path,
                const char* trace_path) {
  return guarded([&] {
    require(config_text && data && checkpoint_path, "null argument");
    const FlatConfig cfg = FlatConfig::parse_text(config_text);
    const RunConfig rc = resolve_run_config(cfg, data->ds.dim());

    Dataset train_data = data->ds;
    std::optional<Normalization> norm;
    if (rc.normalize_inputs) {
      train_data = normalize(train_data);
      norm = train_data.normalization;
    }

    ModelState model = init_model(train_data, rc.init);
    const TrainTrace trace = fit(model, train_data, rc.train);
    save_checkpoint(model, checkpoint_path, rc.resolved.items(), norm, train_data.label_map,
                    rc.train.seed);
    if (trace_path) write_trace_csv(trace, trace_path, rc.resolved);
  });
}

int svgpc_model_load(const char* path, svgpc_model** out) {
  return guarded([&] {
    require(path && out, "null argument");
    auto handle = std::make_unique<svgpc_model>();
    handle->ck = load_checkpoint(path);
    *out = handle.release();
  });
}

int svgpc_model_classes(const svgpc_model* model, int* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = model->ck.model.C;
  });
}

int svgpc_model_dim(const svgpc_model* model, long* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = static_cast<long>(model->ck.model.inducing.Z.cols());
  });
}

int svgpc_model_latents(const svgpc_model* model, int* out) {
  return guarded([&] {
    require(model && out, "null argument");
    *out = model->ck.model.latent_count();
  });
}

int svgpc_model_label(const svgpc_model* model, int class_index, double* out) {
  return guarded([&] {
    require(model && out, "null argument");
    require(class_index >= 0 && class_index < static_cast<int>(model->ck.label_map.size()),
            "class index out of range");
    *out = model->ck.label_map[static_cast<size_t>(class_index)];
  });
}

int svgpc_model_predict(const svgpc_model* model, const double* X, long n, long d,
                        int mc_samples, unsigned long long seed, double* probs, double* mu,
                        double* var) {
  return guarded([&] {
    require(model && X, "null argument");
    require(n >= 1 && d >= 1, "need n >= 1 and d >= 1");
    Matrix Xm(n, d);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < d; ++j) Xm(i, j) = X[i * d + j];
    const Prediction pred = predict(model->ck.model, to_model_space(model->ck, Xm), mc_samples,
                                    seed);
    const int C = model->ck.model.C;
    const int L = model->ck.model.latent_count();
    if (probs)
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < C; ++c) probs[i * C + c] = pred.probs(i, c);
    if (mu)
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < L; ++c) mu[i * L + c] = pred.marginals.mu(i, c);
    if (var)
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < L; ++c) var[i * L + c] = pred.marginals.var(i, c);
  });
}

int svgpc_model_evaluate(const svgpc_model* model, const svgpc_dataset* test, int mc_samples,
                         unsigned long long seed, const char* report_path, double* accuracy,
                         double* mean_nll) {
  return guarded([&] {
    require(model && test, "null argument");
    if (test->ds.dim() != model->ck.model.inducing.Z.cols())
      throw Error(ErrorCode::dimension, "test dataset dimension does not match checkpoint");
    const Eigen::VectorXi y = reconcile_labels(model->ck, test->ds);

    const auto t0 = std::chrono::steady_clock::now();
    const Prediction pred =
        predict(model->ck.model, to_model_space(model->ck, test->ds.X), mc_samples, seed);
    EvalReport rep = evaluate_metrics(pred.probs, y, model->ck.model.C);
    rep.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.seed = seed;

    if (report_path) {
      nlohmann::ordered_json j;
      j["accuracy"] = rep.accuracy;
      j["mean_nll"] = rep.mean_nll;
      j["n_test"] = static_cast<long long>(rep.n_test);
      nlohmann::ordered_json conf = nlohmann::ordered_json::array();
      for (Eigen::Index i = 0; i < rep.confusion.rows(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index k = 0; k < rep.confusion.cols(); ++k) row.push_back(rep.confusion(i, k));
        conf.push_back(std::move(row));
      }
      j["confusion"] = std::move(conf);
      j["labels"] = model->ck.label_map;
      j["runtime_seconds"] = rep.runtime_seconds;
      j["seed"] = rep.seed;
      nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
      for (const auto& [k, v] : model->ck.config_echo) cfg[k] = v;
      j["config"] = std::move(cfg);
      std::ofstream out(report_path);
      if (!out) throw Error(ErrorCode::io, std::string("cannot write ") + report_path);
      out << j.dump(2) << "\n";
    }
    if (accuracy) *accuracy = rep.accuracy;
    if (mean_nll) *mean_nll = rep.mean_nll;
  });
}

int svgpc_model_grid(const svgpc_model* model, double x1_min, double x1_max, double x2_min,
                     double x2_max, int resolution, int mc_samples, unsigned long long seed,
                     const char* grid_csv_path, const char* inducing_csv_path) {
  return guarded([&] {
    require(model && grid_csv_path, "null argument");
    require(resolution >= 2, "resolution must be >= 2");
    require(x1_max > x1_min && x2_max > x2_min, "grid bounds must be increasing");
    const ModelState& m = model->ck.model;
    if (m.inducing.Z.cols() != 2)
      throw Error(ErrorCode::dimension, "grid export requires a model with 2-D inputs");

    const long nrows = static_cast<long>(resolution) * resolution;
    Matrix X(nrows, 2);
    long r = 0;
    for (int i = 0; i < resolution; ++i) {
      const double x2 = x2_min + (x2_max - x2_min) * i / (resolution - 1.0);
      for (int j = 0; j < resolution; ++j, ++r) {
        X(r, 0) = x1_min + (x1_max - x1_min) * j / (resolution - 1.0);
        X(r, 1) = x2;
      }
    }
    const Prediction pred = predict(m, to_model_space(model->ck, X), mc_samples, seed);

    std::ofstream out(grid_csv_path);
    if (!out) throw Error(ErrorCode::io, std::string("cannot write ") + grid_csv_path);
    for (const auto& [k, v] : model->ck.config_echo) out << "# " << k << " = " << v << "\n";
    out << "x1,x2";
    for (int c = 0; c < m.C; ++c) out << ",p_class" << (c + 1);
    out << "\n";
    char buf[64];
    for (long i = 0; i < nrows; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", X(i, 0));
      out << buf;
      std::snprintf(buf, sizeof(buf), ",%.17g", X(i, 1));
      out << buf;
      for (int c = 0; c < m.C; ++c) {
        std::snprintf(buf, sizeof(buf), ",%.17g", pred.probs(i, c));
        out << buf;
      }
      out << "\n";
    }
    if (!out) throw Error(ErrorCode::io, std::string("failed writing ") + grid_csv_path);

    if (inducing_csv_path) {
      // inducing locations reported in the original feature space
      Matrix Z = m.inducing.Z;
      if (model->ck.normalization.has_value()) {
        const auto& norm = *model->ck.normalization;
        Z = (Z.array().rowwise() * norm.std.transpose().array()).matrix();
        Z.rowwise() += norm.mean.transpose();
      }
      std::ofstream zout(inducing_csv_path);
      if (!zout) throw Error(ErrorCode::io, std::string("cannot write ") + inducing_csv_path);
      zout << "z1,z2\n";
      for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", Z(i, 0), Z(i, 1));
        zout << buf;
      }
    }
  });
}

void svgpc_model_free(svgpc_model* model) { delete model; }

}  // extern "C"
