#pragma once

#include "common.hpp"
#include "model.hpp"

#include <map>
#include <string>
#include <vector>

namespace svgpc {

// Flat `key = value` configuration ('#' comments, blank lines ignored).
// Later assignments override earlier ones, so CLI flags are applied on top
// of a file by re-setting keys. The fully resolved set is echoed into
// output artifacts for provenance.
class FlatConfig {
 public:
  static FlatConfig parse_text(const std::string& text);
  static FlatConfig parse_file(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key, int def) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  // key/value pairs in key order (stable echo)
  std::vector<std::pair<std::string, std::string>> items() const;
  std::string to_text() const;

  // throws on keys outside the known training vocabulary
  void check_known_keys() const;

 private:
  std::map<std::string, std::string> values_;
};

// Known training/config vocabulary with defaults applied.
struct RunConfig {
  ModelInit init;
  TrainConfig train;
  int mc_samples = 1000;
  bool normalize_inputs = false;
  FlatConfig resolved;  // every key made explicit, for artifact headers
};

RunConfig resolve_run_config(const FlatConfig& cfg, Eigen::Index data_dim);

// "rbf" | "matern32" | "matern52" | "a+b+..." plus lengthscale/variance
// lists (single values broadcast to all components)
KernelSpec kernel_from_config(const std::string& spec, const std::string& lengthscales,
                              const std::string& variances);

}  // namespace svgpc
