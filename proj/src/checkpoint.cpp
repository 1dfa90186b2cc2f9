#include "model.hpp"

#include <json.hpp>

#include <fstream>

namespace svgpc {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json kernel_to_json(const KernelSpec& spec) {
  ordered_json j;
  j["family"] = kernel_family_name(spec.family);
  if (spec.family == KernelFamily::Sum) {
    j["children"] = ordered_json::array();
    for (const auto& c : spec.children) j["children"].push_back(kernel_to_json(c));
  } else {
    j["lengthscale"] = spec.lengthscale;
    j["variance"] = spec.variance;
  }
  return j;
}

KernelSpec kernel_from_json(const ordered_json& j) {
  KernelSpec spec;
  spec.family = kernel_family_from_name(j.at("family").get<std::string>());
  if (spec.family == KernelFamily::Sum) {
    for (const auto& c : j.at("children")) spec.children.push_back(kernel_from_json(c));
  } else {
    spec.lengthscale = j.at("lengthscale").get<double>();
    spec.variance = j.at("variance").get<double>();
  }
  return spec;
}

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const ordered_json& j) {
  const auto nrows = static_cast<Eigen::Index>(j.size());
  if (nrows == 0) return Matrix(0, 0);
  const auto ncols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix m(nrows, ncols);
  for (Eigen::Index i = 0; i < nrows; ++i) {
    const auto& row = j.at(static_cast<size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != ncols)
      throw Error(ErrorCode::parse, "checkpoint: ragged matrix");
    for (Eigen::Index k = 0; k < ncols; ++k) m(i, k) = row.at(static_cast<size_t>(k)).get<double>();
  }
  return m;
}

ordered_json vector_to_json(const Vector& v) {
  ordered_json arr = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const ordered_json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j.at(static_cast<size_t>(i)).get<double>();
  return v;
}

}  // namespace

void save_checkpoint(const ModelState& model, const std::string& path,
                     const std::vector<std::pair<std::string, std::string>>& config_echo,
                     const std::optional<Normalization>& norm,
                     const std::vector<double>& label_map, std::uint64_t seed) {
  model.validate();
  ordered_json j;
  j["format"] = "svgpc-checkpoint";
  j["version"] = 1;
  j["task"] = task_name(model.task);
  j["classes"] = model.C;
  j["n_total"] = static_cast<long long>(model.n_total);
  if (model.noise.has_value()) {
    ordered_json lik;
    lik["a"] = model.noise->a();
    lik["delta"] = model.noise->delta();
    lik["delta_max"] = model.noise->delta_max();
    lik["train_delta"] = model.noise->trainable_delta();
    j["likelihood"] = std::move(lik);
  } else {
    j["likelihood"] = nullptr;
  }
  j["kernel_shared"] = model.shared_kernel;
  j["kernels"] = ordered_json::array();
  for (const auto& k : model.kernels) j["kernels"].push_back(kernel_to_json(k));
  j["inducing"] = matrix_to_json(model.inducing.Z);
  j["variational"] = ordered_json::array();
  for (const auto& q : model.q_u) {
    ordered_json v;
    v["mean"] = vector_to_json(q.mean);
    v["scale"] = matrix_to_json(q.scale);
    j["variational"].push_back(std::move(v));
  }
  if (norm.has_value()) {
    ordered_json nj;
    nj["mean"] = vector_to_json(norm->mean);
    nj["std"] = vector_to_json(norm->std);
    j["normalization"] = std::move(nj);
  } else {
    j["normalization"] = nullptr;
  }
  j["label_map"] = label_map;
  ordered_json cfg = ordered_json::object();
  for (const auto& [key, value] : config_echo) cfg[key] = value;
  j["config"] = std::move(cfg);
  j["seed"] = seed;

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::parse, std::string("checkpoint parse error: ") + e.what());
  }
  if (j.value("format", std::string()) != "svgpc-checkpoint")
    throw Error(ErrorCode::parse, path + " is not a model checkpoint");

  Checkpoint ck;
  ModelState& model = ck.model;
  model.task = task_from_name(j.at("task").get<std::string>());
  model.C = j.at("classes").get<int>();
  model.n_total = j.at("n_total").get<long long>();
  if (!j.at("likelihood").is_null()) {
    const auto& lik = j.at("likelihood");
    model.noise = NoiseFamily(lik.at("a").get<double>(), lik.at("delta").get<double>(),
                              lik.at("delta_max").get<double>(), lik.at("train_delta").get<bool>());
  }
  model.shared_kernel = j.at("kernel_shared").get<bool>();
  for (const auto& k : j.at("kernels")) model.kernels.push_back(kernel_from_json(k));
  model.inducing.Z = matrix_from_json(j.at("inducing"));
  for (const auto& v : j.at("variational")) {
    GaussianVariational q;
    q.mean = vector_from_json(v.at("mean"));
    q.scale = matrix_from_json(v.at("scale"));
    model.q_u.push_back(std::move(q));
  }
  if (!j.at("normalization").is_null()) {
    Normalization norm;
    norm.mean = vector_from_json(j.at("normalization").at("mean"));
    norm.std = vector_from_json(j.at("normalization").at("std"));
    ck.normalization = std::move(norm);
  }
  ck.label_map = j.at("label_map").get<std::vector<double>>();
  for (const auto& [key, value] : j.at("config").items())
    ck.config_echo.emplace_back(key, value.get<std::string>());
  ck.seed = j.at("seed").get<std::uint64_t>();
  model.validate();
  return ck;
}

}  // namespace svgpc
