#include "dataset.hpp"

#include "numerics.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace svgpc {

namespace {

bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.data();
  const char* end = tok.data() + tok.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(end[-1]))) --end;
  if (begin == end) return false;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

void assign_labels(Dataset& ds, const std::vector<double>& raw) {
  std::map<double, int> classes;
  for (double v : raw) classes.emplace(v, 0);
  const int C = static_cast<int>(classes.size());
  if (C < 2) throw Error(ErrorCode::invalid_argument, "dataset has fewer than 2 distinct labels");

  ds.C = C;
  ds.label_map.clear();
  int idx = 0;
  for (auto& [value, cls] : classes) {
    cls = idx++;
    ds.label_map.push_back(value);
  }
  ds.y.resize(static_cast<Eigen::Index>(raw.size()));
  for (size_t i = 0; i < raw.size(); ++i) {
    const int cls = classes[raw[i]];
    ds.y[static_cast<Eigen::Index>(i)] = (C == 2) ? (cls == 0 ? -1 : 1) : cls + 1;
  }
}

}  // namespace

Dataset load_csv(const std::string& path, int label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  size_t width = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() == 1 && fields[0].empty()) continue;

    std::vector<double> row(fields.size());
    bool ok = true;
    size_t bad_col = 0;
    for (size_t j = 0; j < fields.size(); ++j) {
      if (!parse_double(fields[j], row[j])) {
        ok = false;
        bad_col = j;
        break;
      }
    }
    if (!ok) {
      if (header_allowed && rows.empty()) {
        header_allowed = false;  // single non-numeric leading row treated as header
        continue;
      }
      throw Error(ErrorCode::parse, "non-numeric cell at row " + std::to_string(lineno) +
                                        ", column " + std::to_string(bad_col + 1) + " of " + path);
    }
    if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); }))
      throw Error(ErrorCode::parse, "non-finite value at row " + std::to_string(lineno) + " of " + path);
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw Error(ErrorCode::parse, "inconsistent column count at row " + std::to_string(lineno) +
                                        " of " + path + " (expected " + std::to_string(width) +
                                        ", got " + std::to_string(row.size()) + ")");
    rows.push_back(std::move(row));
    header_allowed = false;
  }
  if (rows.empty()) throw Error(ErrorCode::parse, "no data rows in " + path);
  if (width < 2) throw Error(ErrorCode::parse, "need at least one feature and one label column");

  const int ycol = label_column < 0 ? static_cast<int>(width) - 1 : label_column;
  if (ycol < 0 || ycol >= static_cast<int>(width))
    throw Error(ErrorCode::invalid_argument, "label column out of range");

  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  ds.X.resize(n, static_cast<Eigen::Index>(width) - 1);
  std::vector<double> raw_labels(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index k = 0;
    for (size_t j = 0; j < width; ++j) {
      if (static_cast<int>(j) == ycol)
        raw_labels[static_cast<size_t>(i)] = rows[static_cast<size_t>(i)][j];
      else
        ds.X(i, k++) = rows[static_cast<size_t>(i)][j];
    }
  }
  assign_labels(ds, raw_labels);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path,
              const std::vector<std::string>& header_comment) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path);
  for (const auto& line : header_comment) out << "# " << line << "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.X(i, j));
      out << buf << ',';
    }
    const double label = ds.label_map.empty()
                             ? static_cast<double>(ds.y[i])
                             : ds.label_map[static_cast<size_t>(ds.class_index(i))];
    std::snprintf(buf, sizeof(buf), "%.17g", label);
    out << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::io, "failed writing " + path);
}

Dataset normalize(const Dataset& ds) {
  if (ds.n() < 2) throw Error(ErrorCode::invalid_argument, "normalize: need n >= 2");
  Normalization norm;
  norm.mean = ds.X.colwise().mean();
  Vector var = (ds.X.rowwise() - norm.mean.transpose()).array().square().colwise().mean();
  norm.std = var.cwiseSqrt();
  for (Eigen::Index j = 0; j < norm.std.size(); ++j)
    if (norm.std[j] <= 0.0) norm.std[j] = 1.0;  // constant column
  return apply_normalization(ds, norm);
}

Dataset apply_normalization(const Dataset& ds, const Normalization& norm) {
  if (norm.mean.size() != ds.dim() || norm.std.size() != ds.dim())
    throw Error(ErrorCode::dimension, "apply_normalization: dimension mismatch");
  Dataset out = ds;
  out.X = (ds.X.rowwise() - norm.mean.transpose()).array().rowwise() /
          norm.std.transpose().array();
  out.normalization = norm;
  return out;
}

SplitResult split(const Dataset& ds, double test_fraction, std::uint64_t seed, bool stratified) {
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0))
    throw Error(ErrorCode::invalid_argument, "split: test_fraction must be in (0, 1)");
  const Eigen::Index n = ds.n();
  const Eigen::Index n_test = static_cast<Eigen::Index>(std::llround(test_fraction * n));

  Rng rng(seed, /*stream=*/0x73706c6974ULL);
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  // Fisher-Yates
  for (Eigen::Index i = n - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)],
              order[static_cast<size_t>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1))]);

  std::vector<bool> is_test(static_cast<size_t>(n), false);
  if (!stratified) {
    for (Eigen::Index i = 0; i < n_test; ++i) is_test[static_cast<size_t>(order[static_cast<size_t>(i)])] = true;
  } else {
    // walk the shuffled order once per class, taking round(fraction * n_c)
    std::vector<Eigen::Index> taken(static_cast<size_t>(ds.C), 0), want(static_cast<size_t>(ds.C), 0);
    std::vector<Eigen::Index> count(static_cast<size_t>(ds.C), 0);
    for (Eigen::Index i = 0; i < n; ++i) ++count[static_cast<size_t>(ds.class_index(i))];
    for (int c = 0; c < ds.C; ++c)
      want[static_cast<size_t>(c)] = static_cast<Eigen::Index>(std::llround(test_fraction * count[static_cast<size_t>(c)]));
    for (Eigen::Index pos = 0; pos < n; ++pos) {
      const Eigen::Index i = order[static_cast<size_t>(pos)];
      const auto c = static_cast<size_t>(ds.class_index(i));
      if (taken[c] < want[c]) {
        is_test[static_cast<size_t>(i)] = true;
        ++taken[c];
      }
    }
  }

  auto take = [&](bool test_side) {
    Dataset out;
    out.C = ds.C;
    out.label_map = ds.label_map;
    out.normalization = ds.normalization;
    Eigen::Index cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i) cnt += (is_test[static_cast<size_t>(i)] == test_side);
    out.X.resize(cnt, ds.dim());
    out.y.resize(cnt);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (is_test[static_cast<size_t>(i)] == test_side) {
        out.X.row(k) = ds.X.row(i);
        out.y[k] = ds.y[i];
        ++k;
      }
    }
    return out;
  };
  return {take(false), take(true)};
}

Dataset gen_two_cluster_binary(int n, double noise_scale, std::uint64_t seed) {
  if (n < 4 || n % 2 != 0)
    throw Error(ErrorCode::invalid_argument, "gen_two_cluster_binary: n must be even and >= 4");

  Rng rng(seed, /*stream=*/0x6d6f6f6e73ULL);
  const int half = n / 2;
  Dataset ds;
  ds.X.resize(n, 2);
  ds.y.resize(n);
  ds.C = 2;
  ds.label_map = {-1.0, 1.0};
  constexpr double pi = 3.14159265358979323846;
  for (int i = 0; i < n; ++i) {
    const bool upper = i < half;
    const double t = pi * rng.uniform();
    double x, ycoord;
    if (upper) {
      x = std::cos(t);
      ycoord = std::sin(t);
    } else {
      x = 1.0 - std::cos(t);
      ycoord = 0.5 - std::sin(t);
    }
    // crescents live in roughly [-1, 2] x [-0.5, 1]; rescale to [-3, 3]^2
    x = (x - 0.5) * 2.0;
    ycoord = (ycoord - 0.25) * 2.4;
    ds.X(i, 0) = x + noise_scale * rng.normal();
    ds.X(i, 1) = ycoord + noise_scale * rng.normal();
    ds.y[i] = upper ? 1 : -1;
  }
  return ds;
}

GpMulticlassData gen_gp_multiclass(int n, int C, const KernelSpec& kernel, std::uint64_t seed) {
  if (C < 3) throw Error(ErrorCode::invalid_argument, "gen_gp_multiclass: need C >= 3");
  if (n < C) throw Error(ErrorCode::invalid_argument, "gen_gp_multiclass: need n >= C");
  validate_kernel(kernel);

  for (int attempt = 0; attempt < 10; ++attempt) {
    Rng rng(seed, /*stream=*/0x67706d63ULL + static_cast<std::uint64_t>(attempt));

    // jittered grid covering [-3, 3]^2
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    Matrix X(n, 2);
    const double step = 6.0 / std::max(side - 1, 1);
    int k = 0;
    for (int r = 0; r < side && k < n; ++r)
      for (int c = 0; c < side && k < n; ++c, ++k) {
        X(k, 0) = -3.0 + c * step + 0.25 * step * (rng.uniform() - 0.5);
        X(k, 1) = -3.0 + r * step + 0.25 * step * (rng.uniform() - 0.5);
      }

    Matrix K = kernel_matrix(kernel, X, X);
    K.diagonal().array() += 1e-8;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorCode::numeric, "gen_gp_multiclass: prior covariance not factorizable");
    const Matrix L = llt.matrixL();

    Matrix F(n, C);
    Vector normals(n);
    for (int c = 0; c < C; ++c) {
      for (int i = 0; i < n; ++i) normals[i] = rng.normal();
      F.col(c) = L * normals;
    }

    GpMulticlassData out;
    out.dataset.X = X;
    out.dataset.y.resize(n);
    out.dataset.C = C;
    out.dataset.label_map.resize(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) out.dataset.label_map[static_cast<size_t>(c)] = c + 1;
    std::vector<bool> seen(static_cast<size_t>(C), false);
    for (int i = 0; i < n; ++i) {
      Eigen::Index arg;
      F.row(i).maxCoeff(&arg);
      out.dataset.y[i] = static_cast<int>(arg) + 1;
      seen[static_cast<size_t>(arg)] = true;
    }
    out.latents = F;
    if (std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) return out;
  }
  throw Error(ErrorCode::numeric,
              "gen_gp_multiclass: could not realize all classes in 10 attempts");
}

}  // namespace svgpc
