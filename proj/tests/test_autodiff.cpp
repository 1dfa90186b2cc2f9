#include "autodiff.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

using namespace svgpc;
using ad::Tape;
using ad::Var;

TEST_SUITE_BEGIN("autodiff");

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// compares the reverse-sweep gradient of a scalar-valued graph against
// central finite differences over every entry of every input
void check_gradients(const std::vector<Matrix>& inputs, const Builder& build,
                     double h = 1e-5, double rel_tol = 1e-5, double abs_tol = 1e-7) {
  Tape t;
  std::vector<Var> vars;
  for (const auto& m : inputs) vars.push_back(t.input(m));
  const Var out = build(t, vars);
  REQUIRE(t.val(out).size() == 1);
  t.backward(out);

  auto eval = [&](const std::vector<Matrix>& mats) {
    Tape t2;
    std::vector<Var> vs;
    for (const auto& m : mats) vs.push_back(t2.input(m));
    return t2.scalar(build(t2, vs));
  };

  for (size_t v = 0; v < inputs.size(); ++v) {
    const Matrix& analytic = t.adjoint(vars[v]);
    for (Eigen::Index i = 0; i < inputs[v].rows(); ++i) {
      for (Eigen::Index j = 0; j < inputs[v].cols(); ++j) {
        std::vector<Matrix> plus = inputs, minus = inputs;
        plus[v](i, j) += h;
        minus[v](i, j) -= h;
        const double fd = (eval(plus) - eval(minus)) / (2.0 * h);
        const double got = analytic(i, j);
        const double tol = abs_tol + rel_tol * std::max(std::abs(fd), std::abs(got));
        INFO("input ", v, " entry (", i, ",", j, "): fd=", fd, " ad=", got);
        CHECK(std::abs(fd - got) <= tol);
      }
    }
  }
}

Matrix randm(int r, int c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

}  // namespace

TEST_CASE("elementwise chain: exp, log, sqrt, sigmoid, softplus, log1p") {
  Rng rng(42);
  Matrix x = randm(3, 2, rng).array().abs().matrix();
  x.array() += 0.5;
  check_gradients({x}, [](Tape& t, const std::vector<Var>& v) {
    const Var a = t.vexp(t.scale(v[0], 0.3));
    const Var b = t.vlog(t.shift(a, 1.0));
    const Var c = t.vsqrt(t.shift(b, 0.2));
    const Var d = t.sigmoid(c);
    const Var e = t.softplus(t.sub(d, c));
    return t.sum(t.vlog1p(t.mul(e, e)));
  });
}

TEST_CASE("arithmetic: add, sub, mul, div, neg, scale, shift, smul, sadd") {
  Rng rng(7);
  const Matrix a = randm(2, 3, rng);
  Matrix b = randm(2, 3, rng);
  b.array() += 3.0;  // keep the divisor away from zero
  const Matrix s = Matrix::Constant(1, 1, 0.7);
  check_gradients({a, b, s}, [](Tape& t, const std::vector<Var>& v) {
    const Var w = t.div(t.add(v[0], t.neg(t.scale(v[1], 0.5))), v[1]);
    const Var u = t.smul(t.sub(w, t.shift(v[0], 0.1)), v[2]);
    return t.sum(t.sadd(t.mul(u, w), v[2]));
  });
}

TEST_CASE("matmul and transpose") {
  Rng rng(9);
  const Matrix a = randm(3, 4, rng);
  const Matrix b = randm(4, 2, rng);
  check_gradients({a, b}, [](Tape& t, const std::vector<Var>& v) {
    const Var w = t.matmul(v[0], v[1]);                          // 3x2
    const Var u = t.matmul(t.transpose(v[1]), t.transpose(v[0]));  // 2x3
    return t.add(ad::sum_sq(t, w), t.sum(t.mul(w, t.transpose(u))));
  });
}

TEST_CASE("normal_cdf and log_normal_cdf, including the deep tail") {
  Matrix x(2, 3);
  x << -1.2, 0.0, 2.5, -8.5, -20.0, -45.0;
  check_gradients(
      {x},
      [](Tape& t, const std::vector<Var>& v) {
        return t.sum(t.add(t.normal_cdf(v[0]), t.scale(t.log_normal_cdf(v[0]), 1e-2)));
      },
      1e-6, 1e-4, 1e-6);
}

TEST_CASE("sum, diag_vec, add_scaled_identity, clamp_min") {
  Rng rng(12);
  const Matrix a = randm(4, 4, rng);
  const Matrix s = Matrix::Constant(1, 1, 0.9);
  check_gradients({a, s}, [](Tape& t, const std::vector<Var>& v) {
    const Var b = t.add_scaled_identity(v[0], v[1]);
    const Var d = t.diag_vec(b);
    return t.add(t.sum(t.clamp_min(d, -0.25)), t.sum(b));
  });
}

TEST_CASE("cholesky backward through a generic SPD construction") {
  Rng rng(21);
  const Matrix B = randm(4, 4, rng);
  check_gradients(
      {B},
      [](Tape& t, const std::vector<Var>& v) {
        // A = B B^T + 4 I is SPD for any B
        Var A = t.add_scaled_identity(t.matmul(v[0], t.transpose(v[0])), t.constant_scalar(4.0));
        const Var L = t.chol(A);
        // mixes the factor's diagonal and off-diagonal entries
        return t.add(t.sum(t.vlog(t.diag_vec(L))), ad::sum_sq(t, L));
      },
      1e-5, 1e-4, 1e-7);
}

TEST_CASE("triangular solves backward") {
  Rng rng(33);
  const Matrix packed = randm(10, 1, rng, 0.4);  // lower factor of a 4x4
  const Matrix B = randm(4, 3, rng);
  check_gradients({packed, B}, [](Tape& t, const std::vector<Var>& v) {
    const Var L = t.lower_from_packed(v[0], 4);
    const Var X = t.solve_lower(L, v[1]);
    const Var Y = t.solve_lower_t(L, X);
    return t.add(ad::sum_sq(t, X), t.sum(Y));
  });
}

TEST_CASE("lower_from_packed exponentiates the diagonal") {
  Tape t;
  Matrix packed(6, 1);
  packed << 0.1, 0.5, -0.2, 1.5, 2.0, 0.0;
  const Var L = t.lower_from_packed(t.input(packed), 3);
  const Matrix& Lv = t.val(L);
  CHECK(Lv(0, 0) == doctest::Approx(std::exp(0.1)));
  CHECK(Lv(1, 0) == 0.5);
  CHECK(Lv(1, 1) == doctest::Approx(std::exp(-0.2)));
  CHECK(Lv(2, 0) == 1.5);
  CHECK(Lv(2, 1) == 2.0);
  CHECK(Lv(2, 2) == doctest::Approx(1.0));
  CHECK(Lv(0, 1) == 0.0);
  CHECK(Lv(0, 2) == 0.0);
}

TEST_CASE("sqdist backward, both distinct and repeated arguments") {
  Rng rng(55);
  const Matrix A = randm(4, 2, rng);
  const Matrix B = randm(3, 2, rng);
  check_gradients({A, B}, [](Tape& t, const std::vector<Var>& v) {
    const Var D = t.sqdist(v[0], v[1]);
    return t.sum(t.vexp(t.scale(D, -0.3)));
  });
  check_gradients({A}, [](Tape& t, const std::vector<Var>& v) {
    const Var D = t.sqdist(v[0], v[0]);
    return t.sum(t.vexp(t.scale(D, -0.3)));
  });
}

TEST_CASE("sqdist value matches the plain helper and clamps at zero") {
  Rng rng(101);
  const Matrix A = randm(5, 3, rng);
  Tape t;
  const Var D = t.sqdist(t.input(A), t.input(A));
  for (int i = 0; i < 5; ++i) {
    CHECK(t.val(D)(i, i) == 0.0);
    for (int j = 0; j < 5; ++j)
      CHECK(t.val(D)(i, j) == doctest::Approx((A.row(i) - A.row(j)).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("backward seeds exactly one unit ated root") {
  Tape t;
  const Var x = t.input(Matrix::Constant(1, 1, 2.0));
  const Var y = t.mul(x, x);
  t.backward(y);
  CHECK(t.adjoint(x)(0, 0) == doctest::Approx(4.0));
  CHECK_THROWS_AS([&] {
    Tape t2;
    const Var m = t2.input(Matrix::Zero(2, 2));
    t2.backward(m);
  }(), Error);
}

TEST_SUITE_END();
