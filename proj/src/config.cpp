#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace svgpc {

namespace {

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_list(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorCode::parse, "config value for '" + key + "' is not a number: " + v);
  }
}

}  // namespace

FlatConfig FlatConfig::parse_text(const std::string& text) {
  FlatConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::parse,
                  "config line " + std::to_string(lineno) + " is not 'key = value': " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::parse, "empty config key at line " + std::to_string(lineno));
    cfg.values_[key] = value;
  }
  return cfg;
}

FlatConfig FlatConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

void FlatConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool FlatConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::string FlatConfig::get_string(const std::string& key, const std::string& def) const {
  const auto it = values_.find(key);
  return it == values_.end() ? def : it->second;
}

double FlatConfig::get_double(const std::string& key, double def) const {
  const auto it = values_.find(key);
  return it == values_.end() ? def : to_double(key, it->second);
}

int FlatConfig::get_int(const std::string& key, int def) const {
  const double d = get_double(key, static_cast<double>(def));
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw Error(ErrorCode::parse, "config value for '" + key + "' is not an integer");
  return i;
}

std::uint64_t FlatConfig::get_u64(const std::string& key, std::uint64_t def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw Error(ErrorCode::parse, "config value for '" + key + "' is not an unsigned integer");
  }
}

bool FlatConfig::get_bool(const std::string& key, bool def) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return def;
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::parse, "config value for '" + key + "' is not a boolean: " + it->second);
}

std::vector<std::pair<std::string, std::string>> FlatConfig::items() const {
  return {values_.begin(), values_.end()};
}

std::string FlatConfig::to_text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
  return out.str();
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "likelihood",   "noise_a",      "kernel",       "lengthscale", "variance",
      "kernel_per_class", "m",        "iterations",   "batch_size",  "learning_rate",
      "adam_beta1",   "adam_beta2",   "adam_eps",     "seed",        "quadrature_order",
      "trace_every",  "optimizer",    "delta_init",   "train_delta", "mc_samples",
      "normalize",    "label_column",
  };
  return keys;
}

}  // namespace

void FlatConfig::check_known_keys() const {
  for (const auto& [k, v] : values_) {
    if (!known_keys().count(k))
      throw Error(ErrorCode::invalid_argument, "unknown config key: " + k);
  }
}

KernelSpec kernel_from_config(const std::string& spec, const std::string& lengthscales,
                              const std::string& variances) {
  const auto names = split_list(spec, '+');
  const auto ls_list = split_list(lengthscales, ',');
  const auto var_list = split_list(variances, ',');

  auto pick = [&](const std::vector<std::string>& list, size_t i, const char* what) {
    if (list.size() == 1) return to_double(what, list[0]);
    if (i < list.size()) return to_double(what, list[i]);
    throw Error(ErrorCode::invalid_argument,
                std::string(what) + " list length does not match kernel component count");
  };

  std::vector<KernelSpec> parts;
  for (size_t i = 0; i < names.size(); ++i) {
    KernelSpec k;
    k.family = kernel_family_from_name(names[i]);
    if (k.family == KernelFamily::Sum)
      throw Error(ErrorCode::invalid_argument, "kernel components must be elementary families");
    k.lengthscale = pick(ls_list, i, "lengthscale");
    k.variance = pick(var_list, i, "variance");
    parts.push_back(k);
  }
  if (parts.size() == 1) return parts[0];
  return KernelSpec::sum(std::move(parts));
}

namespace {

void echo_kernel_params(const KernelSpec& spec, Eigen::Index dim, std::vector<double>& ls,
                        std::vector<double>& vr) {
  if (spec.family == KernelFamily::Sum) {
    for (const auto& c : spec.children) echo_kernel_params(c, dim, ls, vr);
    return;
  }
  ls.push_back(spec.lengthscale <= 0.0 ? 0.1 * std::sqrt(static_cast<double>(dim))
                                       : spec.lengthscale);
  vr.push_back(spec.variance <= 0.0 ? 5.0 : spec.variance);
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream out;
  char buf[64];
  for (size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    if (i) out << ',';
    out << buf;
  }
  return out.str();
}

}  // namespace

RunConfig resolve_run_config(const FlatConfig& cfg, Eigen::Index data_dim) {
  cfg.check_known_keys();
  RunConfig rc;

  rc.init.likelihood = cfg.get_string("likelihood", "probit");
  if (cfg.has("noise_a")) rc.init.noise_a = cfg.get_double("noise_a", 0.0);
  rc.init.delta_init = cfg.get_double("delta_init", 1e-3);
  rc.init.train_delta = cfg.get_bool("train_delta", true);
  // lengthscale 0 means the default 0.1 sqrt(d)
  rc.init.kernel = kernel_from_config(cfg.get_string("kernel", "rbf"),
                                      cfg.get_string("lengthscale", "0"),
                                      cfg.get_string("variance", "5.0"));
  rc.init.kernel_per_class = cfg.get_bool("kernel_per_class", false);
  rc.init.m = cfg.get_int("m", 32);
  rc.init.seed = cfg.get_u64("seed", 0);

  rc.train.iterations = cfg.get_int("iterations", 5000);
  rc.train.batch_size = cfg.get_int("batch_size", 1024);
  rc.train.learning_rate = cfg.get_double("learning_rate", 0.01);
  rc.train.adam_beta1 = cfg.get_double("adam_beta1", 0.9);
  rc.train.adam_beta2 = cfg.get_double("adam_beta2", 0.999);
  rc.train.adam_eps = cfg.get_double("adam_eps", 1e-8);
  rc.train.seed = rc.init.seed;
  rc.train.quadrature_order = cfg.get_int("quadrature_order", 20);
  rc.train.trace_every = cfg.get_int("trace_every", 100);
  const std::string opt = cfg.get_string("optimizer", "adam");
  if (opt == "adam")
    rc.train.optimizer = TrainConfig::Optimizer::Adam;
  else if (opt == "gd")
    rc.train.optimizer = TrainConfig::Optimizer::GradientAscent;
  else
    throw Error(ErrorCode::invalid_argument, "optimizer must be 'adam' or 'gd'");

  rc.mc_samples = cfg.get_int("mc_samples", 1000);
  rc.normalize_inputs = cfg.get_bool("normalize", false);

  // echo with every default made explicit
  FlatConfig& r = rc.resolved;
  r.set("likelihood", rc.init.likelihood);
  if (rc.init.noise_a.has_value()) r.set("noise_a", std::to_string(*rc.init.noise_a));
  r.set("kernel", cfg.get_string("kernel", "rbf"));
  {
    std::vector<double> ls, vr;
    echo_kernel_params(rc.init.kernel, data_dim, ls, vr);
    r.set("lengthscale", join_doubles(ls));
    r.set("variance", join_doubles(vr));
  }
  r.set("kernel_per_class", rc.init.kernel_per_class ? "true" : "false");
  r.set("m", std::to_string(rc.init.m));
  r.set("iterations", std::to_string(rc.train.iterations));
  r.set("batch_size", std::to_string(rc.train.batch_size));
  r.set("learning_rate", cfg.get_string("learning_rate", "0.01"));
  r.set("adam_beta1", cfg.get_string("adam_beta1", "0.9"));
  r.set("adam_beta2", cfg.get_string("adam_beta2", "0.999"));
  r.set("adam_eps", cfg.get_string("adam_eps", "1e-8"));
  r.set("seed", std::to_string(rc.train.seed));
  r.set("quadrature_order", std::to_string(rc.train.quadrature_order));
  r.set("trace_every", std::to_string(rc.train.trace_every));
  r.set("optimizer", opt);
  r.set("delta_init", cfg.get_string("delta_init", "1e-3"));
  r.set("train_delta", rc.init.train_delta ? "true" : "false");
  r.set("mc_samples", std::to_string(rc.mc_samples));
  r.set("normalize", rc.normalize_inputs ? "true" : "false");
  return rc;
}

}  // namespace svgpc
