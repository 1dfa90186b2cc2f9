#pragma once

#include "common.hpp"
#include "kernels.hpp"

#include <optional>
#include <string>
#include <vector>

namespace svgpc {

// Per-column standardization record (population convention, divide by n).
// Constant columns keep std = 1 so they map to zero without blowing up.
struct Normalization {
  Vector mean;
  Vector std;
};

struct Dataset {
  Matrix X;             // n x d
  Eigen::VectorXi y;    // -1/+1 for binary (C == 2), 1..C otherwise
  int C = 2;
  std::vector<double> label_map;  // original label of each class, in class order
  std::optional<Normalization> normalization;

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  // position of y[i] in [0, C): binary maps -1 -> 0, +1 -> 1
  int class_index(Eigen::Index i) const { return C == 2 ? (y[i] > 0 ? 1 : 0) : y[i] - 1; }
};

// Numeric CSV with an optional single header row and '#' comment lines.
// label_column < 0 selects the last column. Two distinct labels map to
// {-1, +1} (ascending); more map to contiguous 1..C with label_map
// recording the originals.
Dataset load_csv(const std::string& path, int label_column = -1);

// Writes features then the original labels at 17 significant digits so a
// load/save cycle reproduces the numeric content exactly. header_comment
// lines (if any) are emitted as leading '#' lines.
void save_csv(const Dataset& ds, const std::string& path,
              const std::vector<std::string>& header_comment = {});

// Standardizes every column to zero mean and unit (population) variance,
// recording the statistics on the dataset.
Dataset normalize(const Dataset& ds);

// Applies previously computed statistics (e.g. from the training split).
Dataset apply_normalization(const Dataset& ds, const Normalization& norm);

struct SplitResult {
  Dataset train;
  Dataset test;
};

// Disjoint, exhaustive, seed-deterministic split with round(n * fraction)
// test rows. Stratified mode preserves per-class frequencies within one
// count per class.
SplitResult split(const Dataset& ds, double test_fraction, std::uint64_t seed,
                  bool stratified = false);

// Two interleaved crescent classes with Gaussian jitter, scaled to
// [-3, 3]^2: a nonlinearly separable binary toy. n must be even and >= 4.
Dataset gen_two_cluster_binary(int n, double noise_scale, std::uint64_t seed);

struct GpMulticlassData {
  Dataset dataset;
  Matrix latents;  // n x C draws that produced the labels
};

// 2-D inputs on a jittered grid; C latent vectors drawn from
// N(0, K_nn + 1e-8 I); label = argmax. Redraws (up to 10 attempts on a
// seed-derived stream) until every class appears.
GpMulticlassData gen_gp_multiclass(int n, int C, const KernelSpec& kernel, std::uint64_t seed);

}  // namespace svgpc
