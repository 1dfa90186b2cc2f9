#include "likelihood_softmax.hpp"

#include "numerics.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace svgpc;

TEST_SUITE_BEGIN("likelihood_softmax");

TEST_CASE("softmax_P: zero means and variances give C - 1") {
  for (int C : {2, 3, 6}) {
    const Vector mu = Vector::Zero(C);
    const Vector var = Vector::Zero(C);
    CHECK(softmax_P(0, mu, var) == doctest::Approx(C - 1.0).epsilon(1e-12));
  }
}

TEST_CASE("softmax bound at var = 0 is exactly the log softmax") {
  Rng rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    const int C = 2 + static_cast<int>(rng.uniform_int(5));
    Vector mu(C);
    for (int c = 0; c < C; ++c) mu[c] = 3.0 * rng.normal();
    const Vector var = Vector::Zero(C);
    const int y = static_cast<int>(rng.uniform_int(C));
    const double term = softmax_elbo_term_from_log(softmax_log_P(y, mu, var));
    const double expect = std::log(softmax_vec(mu)[y]);
    CHECK(std::abs(term - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
  }
}

TEST_CASE("softmax_P matches the Monte-Carlo lognormal moments") {
  Vector mu(3), var(3);
  mu << 0.2, -0.7, 1.1;
  var << 0.8, 0.4, 1.5;
  const int y = 2;
  Rng rng(555);
  const auto mc = oracle::monte_carlo(
      [&] {
        double fy = mu[y] + std::sqrt(var[y]) * rng.normal();
        double acc = 0.0;
        for (int c = 0; c < 3; ++c) {
          if (c == y) continue;
          const double fc = mu[c] + std::sqrt(var[c]) * rng.normal();
          acc += std::exp(fc);
        }
        return std::exp(-fy) * acc;
      },
      1000000);
  const double P = softmax_P(y, mu, var);
  CHECK(std::abs(P - mc.mean) <= 3.0 * mc.stderr_);
}

TEST_CASE("softmax_elbo_term values and overflow safety") {
  CHECK(softmax_elbo_term(2.0) == doctest::Approx(-std::log(3.0)).epsilon(1e-14));
  CHECK(softmax_elbo_term(1e-12) == doctest::Approx(0.0).epsilon(1e-11));
  CHECK(softmax_elbo_term(1e-12) < 0.0);
  // the log-space route agrees and survives enormous P
  CHECK(softmax_elbo_term_from_log(std::log(2.0)) ==
        doctest::Approx(-std::log(3.0)).epsilon(1e-12));
  CHECK(softmax_elbo_term_from_log(800.0) == doctest::Approx(-800.0).epsilon(1e-12));
  CHECK_THROWS_AS(softmax_elbo_term(0.0), Error);
}

TEST_CASE("theta* = P + 1 is the stationary point of the pre-substitution bound") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const double P = std::exp(2.0 * rng.normal());
    auto bound = [&](double theta) {
      return -P / theta - std::log(theta) - 1.0 / theta + 1.0;
    };
    const double theta_star = P + 1.0;
    const double slope = oracle::central_diff(bound, theta_star, 1e-5 * theta_star);
    CHECK(std::abs(slope) <= 1e-8);
    // substituted value equals -log(P + 1)
    CHECK(bound(theta_star) == doctest::Approx(softmax_elbo_term(P)).epsilon(1e-12));
    // it is a maximum: nearby values are lower
    CHECK(bound(theta_star * 1.05) < bound(theta_star));
    CHECK(bound(theta_star * 0.95) < bound(theta_star));
  }
}

TEST_CASE("gumbel_kl: exact values and the density-quadrature oracle") {
  CHECK(gumbel_kl(1.0) == 0.0);
  CHECK(gumbel_kl(std::exp(1.0)) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  for (double theta : {1.5, 3.0, 10.0}) {
    // KL(Gumbel(log theta, 1) || Gumbel(0, 1)) by direct quadrature of
    // q log(q/p)
    const double mu = std::log(theta);
    const auto integrand = [&](double x) {
      const double q = gumbel_pdf(x - mu);
      if (q <= 0.0) return 0.0;
      const double logq = -(x - mu) - std::exp(-(x - mu));
      const double logp = -x - std::exp(-x);
      return q * (logq - logp);
    };
    const double numeric = oracle::simpson(integrand, -20.0, 40.0, 60000);
    CHECK(gumbel_kl(theta) == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("gumbel_kl is nonnegative with its only zero at theta = 1") {
  for (double lt = -2.0; lt <= 2.0 + 1e-12; lt += 0.05) {
    const double theta = std::pow(10.0, lt);
    const double v = gumbel_kl(theta);
    CHECK(v >= 0.0);
    if (std::abs(theta - 1.0) > 1e-3) CHECK(v > 0.0);
  }
}

TEST_CASE("adding a constant to every latent mean leaves P unchanged") {
  Rng rng(31);
  Vector mu(4), var(4);
  for (int c = 0; c < 4; ++c) {
    mu[c] = rng.normal();
    var[c] = std::abs(rng.normal());
  }
  const double base = softmax_log_P(1, mu, var);
  for (double shift : {-5.0, 0.3, 12.0}) {
    const Vector shifted = mu.array() + shift;
    CHECK(std::abs(softmax_log_P(1, shifted, var) - base) <= 1e-12 * std::max(1.0, std::abs(base)));
  }
}

TEST_CASE("softmax_predict_mc: deterministic, normalized, exact at var = 0") {
  Vector mu(3), var(3);
  mu << 0.5, -0.2, 1.0;
  var.setZero();
  const Vector p1 = softmax_predict_mc(mu, var, 7, 42);
  const Vector p2 = softmax_predict_mc(mu, var, 7, 42);
  CHECK((p1 - p2).norm() == 0.0);
  const Vector expect = softmax_vec(mu);
  CHECK((p1 - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(std::abs(p1.sum() - 1.0) < 1e-12);
}

TEST_CASE("softmax_predict_mc: exchangeable inputs are uniform within MC error") {
  const int n = 40000;
  const Vector mu = Vector::Constant(3, 0.7);
  const Vector var = Vector::Constant(3, 2.0);
  const Vector p = softmax_predict_mc(mu, var, n, 9);
  for (int c = 0; c < 3; ++c) CHECK(std::abs(p[c] - 1.0 / 3.0) <= 3.0 / std::sqrt(n));
}

TEST_CASE("softmax_predict_mc: C = 2 matches Gauss-Hermite on the difference") {
  Vector mu(2), var(2);
  mu << 0.9, -0.4;
  var << 1.3, 0.6;
  // E sigmoid(f1 - f2) with f1 - f2 ~ N(mu1 - mu2, var1 + var2), 64 nodes
  const auto rule = gauss_hermite(64);
  const double dm = mu[0] - mu[1];
  const double sd = std::sqrt(var[0] + var[1]);
  double expect = 0.0;
  for (int k = 0; k < rule.order; ++k)
    expect += rule.weights[k] * logistic_cdf(dm + std::sqrt(2.0) * sd * rule.nodes[k]);
  expect /= std::sqrt(M_PI);

  const int n = 1000000;
  const Vector p = softmax_predict_mc(mu, var, n, 123);
  // binomial-style bound on the standard error of the estimated mean
  const double se = 0.5 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(p[0] - expect) <= 3.0 * se);
}

TEST_CASE("softmax_predict_mc error shrinks like 1/sqrt(n_samples)") {
  Vector mu(3), var(3);
  mu << 0.3, -0.1, 0.6;
  var << 0.9, 1.1, 0.5;

  auto spread = [&](int n_samples) {
    // sample standard deviation of the first class probability over
    // repeated seeds
    const int reps = 24;
    double sum = 0.0, sumsq = 0.0;
    for (int r = 0; r < reps; ++r) {
      const double v = softmax_predict_mc(mu, var, n_samples, 1000 + r)[0];
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / reps;
    return std::sqrt(std::max(sumsq / reps - mean * mean, 0.0));
  };

  const double s4 = spread(10000);
  const double s5 = spread(100000);
  const double ratio = s4 / s5;  // ideally sqrt(10) ~ 3.16
  CHECK(ratio > std::sqrt(10.0) / 1.5);
  CHECK(ratio < std::sqrt(10.0) * 1.5);
}

TEST_SUITE_END();
