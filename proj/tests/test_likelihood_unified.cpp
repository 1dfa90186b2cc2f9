#include "likelihood_unified.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace svgpc;

TEST_SUITE_BEGIN("likelihood_unified");

TEST_CASE("noise family construction and the logit constant") {
  const auto nf = NoiseFamily::logit();
  CHECK(nf.a() == doctest::Approx(2.897));
  CHECK(NoiseFamily::step().a() == 0.0);
  CHECK(NoiseFamily::probit().a() == 1.0);
  CHECK(nf.delta() == doctest::Approx(1e-3));
  CHECK(nf.delta_max() == 0.25);
  CHECK(NoiseFamily::delta_max_for(5) == 0.25);
  CHECK_THROWS_AS(NoiseFamily(-0.5, 1e-3, 0.25, true), Error);
  CHECK_THROWS_AS(NoiseFamily(1.0, 0.3, 0.25, true), Error);
}

TEST_CASE("delta round-trips through its unconstrained parameter") {
  auto nf = NoiseFamily::probit();
  const double rho = nf.rho();
  nf.set_rho(rho);
  CHECK(nf.delta() == doctest::Approx(1e-3).epsilon(1e-12));
  nf.set_rho(0.0);
  CHECK(nf.delta() == doctest::Approx(0.125));
}

TEST_CASE("binary_elbo_term: mu = 0 arithmetic value") {
  const auto nf = NoiseFamily::probit();
  // Phi(0) = 1/2: 0.5 log(999) + log(1e-3)
  const double expect = 0.5 * std::log(999.0) + std::log(1e-3);
  CHECK(binary_elbo_term(1, 0.0, 0.7, nf) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(binary_elbo_term(-1, 0.0, 0.7, nf) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("binary_elbo_term: saturates at log(1-delta)") {
  const auto nf = NoiseFamily::step();
  CHECK(binary_elbo_term(1, 1e9, 1.0, nf) == doctest::Approx(std::log(1.0 - 1e-3)).epsilon(1e-12));
}

TEST_CASE("binary_elbo_term matches a Monte-Carlo expectation of the robust step log-likelihood") {
  const NoiseFamily nf(1.7, 0.01, 0.25, true);
  const double mu = 0.43, var = 0.9;
  const int y = 1;
  Rng rng(2718);
  const double sd = std::sqrt(nf.a() + var);
  const auto mc = oracle::monte_carlo(
      [&] {
        const double g = mu + sd * rng.normal();
        // log p(y | g) for the robust step likelihood
        return y * g > 0 ? std::log1p(-nf.delta()) : std::log(nf.delta());
      },
      1000000);
  const double got = binary_elbo_term(y, mu, var, nf);
  CHECK(std::abs(got - mc.mean) <= 3.0 * mc.stderr_);
}

TEST_CASE("binary_predict basics") {
  const auto nf = NoiseFamily::probit();
  CHECK(binary_predict(0.0, 0.37, nf) == doctest::Approx(0.5).epsilon(1e-14));
  // step limit with delta = 0
  const NoiseFamily step0(0.0, 0.0, 0.25, false);
  CHECK(binary_predict(3.0, 0.0, step0) == doctest::Approx(1.0).epsilon(1e-12));
  // probit, delta = 0: Phi(1/sqrt(2))
  const NoiseFamily probit0(1.0, 0.0, 0.25, false);
  CHECK(binary_predict(1.0, 1.0, probit0) ==
        doctest::Approx(oracle::normal_cdf_series(1.0 / std::sqrt(2.0))).epsilon(1e-12));
  CHECK(binary_predict(1.0, 1.0, probit0) == doctest::Approx(0.760250).epsilon(1e-6));
}

TEST_CASE("binary_predict stays inside [delta, 1 - delta]") {
  const auto nf = NoiseFamily::logit(2, 0.05);
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double p = binary_predict(50.0 * rng.normal(), std::abs(rng.normal()), nf);
    CHECK(p >= 0.05);
    CHECK(p <= 0.95);
  }
}

TEST_CASE("multiclass_S: symmetric inputs tie at 1/C") {
  const auto rule = gauss_hermite(20);
  for (int C : {2, 3, 5}) {
    const auto nf = NoiseFamily::probit(C);
    const Vector mu = Vector::Constant(C, 0.4);
    const Vector var = Vector::Constant(C, 0.9);
    for (int y = 0; y < C; ++y)
      CHECK(multiclass_S(y, mu, var, nf, rule) == doctest::Approx(1.0 / C).epsilon(1e-6));
  }
}

TEST_CASE("multiclass_S: C = 2 reduces to the closed-form Gaussian identity") {
  const auto rule = gauss_hermite(20);
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const double a = (trial % 3 == 0) ? 0.0 : std::abs(rng.normal());
    const NoiseFamily nf(a, 1e-3, 0.25, true);
    Vector mu(2), var(2);
    mu << rng.normal(), rng.normal();
    var << std::abs(rng.normal()), std::abs(rng.normal());
    const double S = multiclass_S(0, mu, var, nf, rule);
    const double expect =
        std_normal_cdf((mu[0] - mu[1]) / std::sqrt(2.0 * a + var[0] + var[1]));
    CHECK(S == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("multiclass_S: C = 4 case agrees with Monte Carlo") {
  const auto rule = gauss_hermite(20);
  const NoiseFamily nf(1.0, 1e-3, 0.25, true);
  Vector mu(4), var(4);
  mu << 0.8, -0.3, 0.1, -1.0;
  var << 0.5, 1.2, 0.3, 2.0;
  const int y = 0;
  Rng rng(99);
  const auto mc = oracle::monte_carlo(
      [&] {
        const double g = mu[y] + std::sqrt(nf.a() + var[y]) * rng.normal();
        double prod = 1.0;
        for (int c = 0; c < 4; ++c)
          if (c != y) prod *= std_normal_cdf((g - mu[c]) / std::sqrt(nf.a() + var[c]));
        return prod;
      },
      1000000);
  const double S = multiclass_S(y, mu, var, nf, rule);
  CHECK(std::abs(S - mc.mean) <= 3.0 * mc.stderr_);
}

TEST_CASE("multiclass_S: orders 20 and 40 agree to 1e-7") {
  const auto r20 = gauss_hermite(20);
  const auto r40 = gauss_hermite(40);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int C = 2 + static_cast<int>(rng.uniform_int(4));
    const NoiseFamily nf(std::abs(rng.normal()), 1e-3, 0.25, true);
    Vector mu(C), var(C);
    for (int c = 0; c < C; ++c) {
      mu[c] = 2.0 * rng.normal();
      var[c] = std::abs(rng.normal()) + 0.01;
    }
    const int y = static_cast<int>(rng.uniform_int(C));
    CHECK(std::abs(multiclass_S(y, mu, var, nf, r20) - multiclass_S(y, mu, var, nf, r40)) <=
          1e-7);
  }
}

TEST_CASE("multiclass_elbo_term endpoints and midpoint") {
  const auto nf = NoiseFamily::probit(3);
  CHECK(multiclass_elbo_term(1.0, nf, 3) == doctest::Approx(std::log(1.0 - 1e-3)).epsilon(1e-12));
  CHECK(multiclass_elbo_term(0.0, nf, 3) == doctest::Approx(std::log(1e-3 / 2.0)).epsilon(1e-12));
  const double expect = 0.5 * (std::log(0.999) + std::log(5e-4));
  CHECK(multiclass_elbo_term(0.5, nf, 3) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect == doctest::Approx(-3.8010).epsilon(1e-4));
}

TEST_CASE("multiclass_predict: symmetric inputs are uniform, entries sum to 1") {
  const auto rule = gauss_hermite(20);
  const auto nf = NoiseFamily::probit(4);
  const Vector mu = Vector::Constant(4, -0.2);
  const Vector var = Vector::Constant(4, 1.4);
  const Vector p = multiclass_predict(mu, var, nf, rule);
  for (int c = 0; c < 4; ++c) CHECK(p[c] == doctest::Approx(0.25).epsilon(1e-6));

  Rng rng(303);
  for (int trial = 0; trial < 20; ++trial) {
    Vector m(4), v(4);
    for (int c = 0; c < 4; ++c) {
      m[c] = 2.0 * rng.normal();
      v[c] = std::abs(rng.normal()) + 0.05;
    }
    const Vector q = multiclass_predict(m, v, nf, rule);
    CHECK(q.sum() == doctest::Approx(1.0).epsilon(1e-6));
    for (int c = 0; c < 4; ++c) {
      CHECK(q[c] > nf.delta() / 3.0 - 1e-12);
      CHECK(q[c] < 1.0 - nf.delta() + 1e-12);
    }
  }
}

TEST_CASE("multiclass_predict: C = 2 agrees with binary_predict on the difference process") {
  const auto rule = gauss_hermite(20);
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const double a = std::abs(rng.normal());
    const double delta = 0.01;
    const NoiseFamily nf2(a, delta, 0.25, true);
    Vector mu(2), var(2);
    mu << rng.normal(), rng.normal();
    var << std::abs(rng.normal()), std::abs(rng.normal());
    const Vector p = multiclass_predict(mu, var, nf2, rule);
    // difference latent f0 - f1 carries the summed noise 2a
    const NoiseFamily diff(2.0 * a, delta, 0.25, true);
    const double pb = binary_predict(mu[0] - mu[1], var[0] + var[1], diff);
    CHECK(p[0] == doctest::Approx(pb).epsilon(1e-6));
  }
}

TEST_CASE("delta_stationary endpoints") {
  const auto nf = NoiseFamily::probit();
  const int n = 12;
  Vector mu = Vector::Constant(n, 1e9);
  Vector var = Vector::Constant(n, 0.3);
  Eigen::VectorXi y = Eigen::VectorXi::Constant(n, 1);
  CHECK(delta_stationary(mu, var, y, nf) == doctest::Approx(0.0).epsilon(1e-12));
  mu.setZero();
  CHECK(delta_stationary(mu, var, y, nf) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("delta_stationary zeroes the data term's derivative in delta") {
  Rng rng(23);
  const int n = 20;
  Vector mu(n), var(n);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    mu[i] = rng.normal();
    var[i] = std::abs(rng.normal()) + 0.1;
    y[i] = rng.uniform() < 0.5 ? -1 : 1;
  }
  const NoiseFamily base = NoiseFamily::probit();
  const double dstar = delta_stationary(mu, var, y, base);
  REQUIRE(dstar > 0.0);
  REQUIRE(dstar < 1.0);

  auto data_term = [&](double d) {
    const NoiseFamily nf(base.a(), d, 0.9999, false);  // wide box for probing
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += binary_elbo_term(y[i], mu[i], var[i], nf);
    return acc;
  };
  const double slope = oracle::central_diff(data_term, dstar, 1e-7);
  CHECK(std::abs(slope) <= 1e-6);
}

TEST_CASE("data term decreases as the noise variance grows (correct side of zero)") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const double mu = std::abs(rng.normal()) + 0.05;  // y mu > 0 with y = +1
    const double var = std::abs(rng.normal()) + 0.05;
    const double t0 = binary_elbo_term(1, mu, var, NoiseFamily::step());
    const double t1 = binary_elbo_term(1, mu, var, NoiseFamily::probit());
    const double t2 = binary_elbo_term(1, mu, var, NoiseFamily::logit());
    CHECK(t0 > t1);
    CHECK(t1 > t2);
  }
}

TEST_CASE("the logit noise variance approximates the logistic cdf to within 0.008..0.010") {
  double max_diff = 0.0;
  const double inv = 1.0 / std::sqrt(kLogitNoiseVariance);
  for (double x = -10.0; x <= 10.0 + 1e-9; x += 1e-3)
    max_diff = std::max(max_diff, std::abs(std_normal_cdf(x * inv) - logistic_cdf(x)));
  CHECK(max_diff >= 0.008);
  CHECK(max_diff <= 0.010);
}

TEST_SUITE_END();
