#pragma once

#include "common.hpp"
#include "numerics.hpp"

namespace svgpc {

inline constexpr double kLogitNoiseVariance = 2.897;

// Additive-Gaussian-noise likelihood configuration. The noise variance a
// selects the link (0 = step, 1 = probit, 2.897 = logit, or any explicit
// nonnegative value); a is fixed at construction and is never a trainable
// parameter. delta is the small label-flip probability that keeps the
// per-point bound finite and adds outlier robustness.
class NoiseFamily {
 public:
  NoiseFamily(double a, double delta, double delta_max, bool trainable_delta)
      : a_(a), delta_max_(delta_max), trainable_delta_(trainable_delta) {
    if (a < 0.0) throw Error(ErrorCode::invalid_argument, "noise variance a must be >= 0");
    set_delta(delta);
  }

  static double delta_max_for(int classes) {
    return classes <= 2 ? 0.25 : std::min(0.25, (classes - 1.0) / classes);
  }

  static NoiseFamily step(int classes = 2, double delta = 1e-3, bool train = true) {
    return NoiseFamily(0.0, delta, delta_max_for(classes), train);
  }
  static NoiseFamily probit(int classes = 2, double delta = 1e-3, bool train = true) {
    return NoiseFamily(1.0, delta, delta_max_for(classes), train);
  }
  static NoiseFamily logit(int classes = 2, double delta = 1e-3, bool train = true) {
    return NoiseFamily(kLogitNoiseVariance, delta, delta_max_for(classes), train);
  }

  double a() const { return a_; }
  double delta() const { return delta_; }
  double delta_max() const { return delta_max_; }
  bool trainable_delta() const { return trainable_delta_; }

  void set_delta(double d) {
    // delta = 0 is admitted for evaluation-only use (exact step limit);
    // training requires delta > 0 so the bound stays finite.
    if (!(d >= 0.0) || !(d < delta_max_))
      throw Error(ErrorCode::invalid_argument, "delta must lie in [0, delta_max)");
    delta_ = d;
  }

  // delta = delta_max * sigmoid(rho); rho is the unconstrained parameter
  double rho() const { return std::log(delta_ / (delta_max_ - delta_)); }
  void set_rho(double rho) { delta_ = delta_max_ * sigmoid(rho); }

 private:
  double a_;
  double delta_;
  double delta_max_;
  bool trainable_delta_;
};

// Per-point bound term for y in {-1, +1} with latent marginal N(mu, var):
//   log((1-delta)/delta) Phi(y mu / sqrt(a + var)) + log delta
double binary_elbo_term(int y, double mu, double var, const NoiseFamily& nf);

// (1 - 2 delta) Phi(mu / sqrt(a + var)) + delta, the probability of y = +1
double binary_predict(double mu_star, double var_star, const NoiseFamily& nf);

// S_i: probability that the latent of the observed class exceeds all
// others, E_{g ~ N(mu_y, a+var_y)} prod_{c != y} Phi((g - mu_c)/sqrt(a + var_c)),
// by Gauss-Hermite quadrature over g.
double multiclass_S(int y, const Vector& mu, const Vector& var, const NoiseFamily& nf,
                    const GaussHermiteRule& rule);

// log(1-delta) S + log(delta/(C-1)) (1-S)
double multiclass_elbo_term(double S, const NoiseFamily& nf, int classes);

// class probabilities (1-delta) S_c + delta/(C-1) (1 - S_c)
Vector multiclass_predict(const Vector& mu_star, const Vector& var_star, const NoiseFamily& nf,
                          const GaussHermiteRule& rule);

// stationary point of the binary data term in delta:
//   delta* = 1 - (1/n) sum_i Phi(y_i mu_i / sqrt(a + var_i))
double delta_stationary(const Vector& mu, const Vector& var,
                        const Eigen::VectorXi& y, const NoiseFamily& nf);

}  // namespace svgpc
