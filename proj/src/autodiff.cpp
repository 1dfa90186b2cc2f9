#include "autodiff.hpp"

#include "numerics.hpp"

#include <cmath>

namespace svgpc::ad {

namespace {

// dense copy of the lower triangle, upper part zeroed
Matrix take_lower(const Matrix& m) {
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  out.triangularView<Eigen::Lower>() = m;
  return out;
}

}  // namespace

Var Tape::push(Matrix v, std::function<void(Tape&, const Matrix&)> pull) {
  Node n;
  n.value = std::move(v);
  n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
  n.pull = std::move(pull);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Matrix v) { return push(std::move(v)); }

Var Tape::constant_scalar(double v) { return push(Matrix::Constant(1, 1, v)); }

Var Tape::input(Matrix v) { return push(std::move(v)); }

void Tape::backward(Var root) {
  if (nodes_[root.id].value.size() != 1)
    throw Error(ErrorCode::invalid_argument, "backward: root must be a scalar");
  nodes_[root.id].adjoint(0, 0) = 1.0;
  for (int i = root.id; i >= 0; --i) {
    if (nodes_[i].pull) nodes_[i].pull(*this, nodes_[i].adjoint);
  }
}

Var Tape::add(Var a, Var b) {
  return push(val(a) + val(b), [a, b](Tape& t, const Matrix& g) {
    t.adj(a.id) += g;
    t.adj(b.id) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  return push(val(a) - val(b), [a, b](Tape& t, const Matrix& g) {
    t.adj(a.id) += g;
    t.adj(b.id) -= g;
  });
}

Var Tape::mul(Var a, Var b) {
  return push(val(a).cwiseProduct(val(b)), [a, b](Tape& t, const Matrix& g) {
    t.adj(a.id) += g.cwiseProduct(t.val(b));
    t.adj(b.id) += g.cwiseProduct(t.val(a));
  });
}

Var Tape::div(Var a, Var b) {
  return push(val(a).cwiseQuotient(val(b)), [a, b](Tape& t, const Matrix& g) {
    const Matrix ginv = g.cwiseQuotient(t.val(b));
    t.adj(a.id) += ginv;
    t.adj(b.id) -= ginv.cwiseProduct(t.val(a)).cwiseQuotient(t.val(b));
  });
}

Var Tape::neg(Var a) {
  return push(-val(a), [a](Tape& t, const Matrix& g) { t.adj(a.id) -= g; });
}

Var Tape::scale(Var a, double c) {
  return push(c * val(a), [a, c](Tape& t, const Matrix& g) { t.adj(a.id) += c * g; });
}

Var Tape::shift(Var a, double c) {
  Matrix v = val(a);
  v.array() += c;
  return push(std::move(v), [a](Tape& t, const Matrix& g) { t.adj(a.id) += g; });
}

Var Tape::smul(Var a, Var s) {
  const double sv = scalar(s);
  return push(sv * val(a), [a, s, sv](Tape& t, const Matrix& g) {
    t.adj(a.id) += sv * g;
    t.adj(s.id)(0, 0) += g.cwiseProduct(t.val(a)).sum();
  });
}

Var Tape::sadd(Var a, Var s) {
  Matrix v = val(a);
  v.array() += scalar(s);
  return push(std::move(v), [a, s](Tape& t, const Matrix& g) {
    t.adj(a.id) += g;
    t.adj(s.id)(0, 0) += g.sum();
  });
}

Var Tape::matmul(Var a, Var b) {
  return push(val(a) * val(b), [a, b](Tape& t, const Matrix& g) {
    t.adj(a.id) += g * t.val(b).transpose();
    t.adj(b.id) += t.val(a).transpose() * g;
  });
}

Var Tape::transpose(Var a) {
  return push(val(a).transpose(), [a](Tape& t, const Matrix& g) { t.adj(a.id) += g.transpose(); });
}

Var Tape::vexp(Var a) {
  Matrix v = val(a).array().exp().matrix();
  Var out = push(std::move(v), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [a, oid](Tape& t, const Matrix& g) {
    t.adj(a.id) += g.cwiseProduct(t.nodes_[oid].value);
  };
  return out;
}

Var Tape::vlog(Var a) {
  Matrix v = val(a).array().log().matrix();
  return push(std::move(v), [a](Tape& t, const Matrix& g) {
    t.adj(a.id) += g.cwiseQuotient(t.val(a));
  });
}

Var Tape::vlog1p(Var a) {
  Matrix v = val(a).array().log1p().matrix();
  return push(std::move(v), [a](Tape& t, const Matrix& g) {
    t.adj(a.id) += (g.array() / (1.0 + t.val(a).array())).matrix();
  });
}

Var Tape::vsqrt(Var a) {
  Matrix v = val(a).cwiseMax(0.0).cwiseSqrt();
  Var out = push(std::move(v), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [a, oid](Tape& t, const Matrix& g) {
    // derivative 1/(2 sqrt(x)); zero where the argument vanishes
    const Matrix& s = t.nodes_[oid].value;
    const Matrix mask = (t.val(a).array() > 1e-300).cast<double>().matrix();
    t.adj(a.id) += 0.5 * g.cwiseProduct(mask).cwiseQuotient(s.cwiseMax(1e-300));
  };
  return out;
}

Var Tape::clamp_min(Var a, double c) {
  return push(val(a).cwiseMax(c), [a, c](Tape& t, const Matrix& g) {
    const Matrix mask = (t.val(a).array() > c).cast<double>().matrix();
    t.adj(a.id) += g.cwiseProduct(mask);
  });
}

Var Tape::normal_cdf(Var a) {
  Matrix v = val(a).unaryExpr([](double x) { return svgpc::std_normal_cdf(x); });
  return push(std::move(v), [a](Tape& t, const Matrix& g) {
    const Matrix pdf = t.val(a).unaryExpr([](double x) { return svgpc::std_normal_pdf(x); });
    t.adj(a.id) += g.cwiseProduct(pdf);
  });
}

Var Tape::log_normal_cdf(Var a) {
  Matrix v = val(a).unaryExpr([](double x) { return svgpc::log_std_normal_cdf(x); });
  Var out = push(std::move(v), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [a, oid](Tape& t, const Matrix& g) {
    // d/dx log Phi = phi/Phi = exp(log phi - log Phi)
    const Matrix& logcdf = t.nodes_[oid].value;
    const Matrix ratio =
        (-0.5 * t.val(a).array().square() - 0.9189385332046727 - logcdf.array()).exp().matrix();
    t.adj(a.id) += g.cwiseProduct(ratio);
  };
  return out;
}

Var Tape::sigmoid(Var a) {
  Matrix v = val(a).unaryExpr([](double x) { return svgpc::sigmoid(x); });
  Var out = push(std::move(v), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [a, oid](Tape& t, const Matrix& g) {
    const Matrix& s = t.nodes_[oid].value;
    const Matrix ds = (s.array() * (1.0 - s.array())).matrix();
    t.adj(a.id) += g.cwiseProduct(ds);
  };
  return out;
}

Var Tape::softplus(Var a) {
  Matrix v = val(a).unaryExpr([](double x) { return svgpc::softplus(x); });
  return push(std::move(v), [a](Tape& t, const Matrix& g) {
    const Matrix s = t.val(a).unaryExpr([](double x) { return svgpc::sigmoid(x); });
    t.adj(a.id) += g.cwiseProduct(s);
  });
}

Var Tape::sum(Var a) {
  return push(Matrix::Constant(1, 1, val(a).sum()), [a](Tape& t, const Matrix& g) {
    t.adj(a.id).array() += g(0, 0);
  });
}

Var Tape::chol(Var a) {
  Eigen::LLT<Matrix> llt(val(a));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::numeric, "autodiff chol: factorization failed");
  Matrix L = llt.matrixL();
  Var out = push(std::move(L), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [a, oid](Tape& t, const Matrix& g) {
    // reverse of A = L L^T:  Abar = L^{-T} Phi(L^T Lbar) L^{-1},
    // Phi = lower triangle with the diagonal halved
    const Matrix& L = t.nodes_[oid].value;
    Matrix P = take_lower(L.transpose() * g);
    P.diagonal() *= 0.5;
    const Matrix T1 = L.transpose().triangularView<Eigen::Upper>().solve(P);
    const Matrix G =
        L.transpose().triangularView<Eigen::Upper>().solve(T1.transpose()).transpose();
    t.adj(a.id) += G;
  };
  return out;
}

Var Tape::solve_lower(Var l, Var b) {
  Matrix x = val(l).triangularView<Eigen::Lower>().solve(val(b));
  Var out = push(std::move(x), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [l, b, oid](Tape& t, const Matrix& g) {
    const Matrix& L = t.val(l);
    const Matrix& X = t.nodes_[oid].value;
    const Matrix bbar = L.transpose().triangularView<Eigen::Upper>().solve(g);
    t.adj(b.id) += bbar;
    t.adj(l.id) -= take_lower(bbar * X.transpose());
  };
  return out;
}

Var Tape::solve_lower_t(Var l, Var b) {
  Matrix x = val(l).transpose().triangularView<Eigen::Upper>().solve(val(b));
  Var out = push(std::move(x), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [l, b, oid](Tape& t, const Matrix& g) {
    const Matrix& L = t.val(l);
    const Matrix& X = t.nodes_[oid].value;
    const Matrix bbar = L.triangularView<Eigen::Lower>().solve(g);
    t.adj(b.id) += bbar;
    t.adj(l.id) -= take_lower(X * bbar.transpose());
  };
  return out;
}

Var Tape::diag_vec(Var a) {
  Matrix v = val(a).diagonal();
  return push(std::move(v), [a](Tape& t, const Matrix& g) {
    t.adj(a.id).diagonal() += g.col(0);
  });
}

Var Tape::add_scaled_identity(Var a, Var s) {
  Matrix v = val(a);
  v.diagonal().array() += scalar(s);
  return push(std::move(v), [a, s](Tape& t, const Matrix& g) {
    t.adj(a.id) += g;
    t.adj(s.id)(0, 0) += g.trace();
  });
}

Var Tape::lower_from_packed(Var packed, int m) {
  const Matrix& p = val(packed);
  if (p.size() != m * (m + 1) / 2)
    throw Error(ErrorCode::dimension, "lower_from_packed: bad packed size");
  Matrix L = Matrix::Zero(m, m);
  int k = 0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j, ++k) L(i, j) = (i == j) ? std::exp(p(k)) : p(k);
  Var out = push(std::move(L), nullptr);
  const int oid = out.id;
  nodes_[oid].pull = [packed, m, oid](Tape& t, const Matrix& g) {
    const Matrix& L = t.nodes_[oid].value;
    Matrix& pbar = t.adj(packed.id);
    int k = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j <= i; ++j, ++k) pbar(k) += (i == j) ? g(i, j) * L(i, j) : g(i, j);
  };
  return out;
}

Var Tape::sqdist(Var a, Var b) {
  const Matrix& A = val(a);
  const Matrix& B = val(b);
  if (A.cols() != B.cols())
    throw Error(ErrorCode::dimension, "sqdist: column counts differ");
  const Vector a2 = A.rowwise().squaredNorm();
  const Vector b2 = B.rowwise().squaredNorm();
  Matrix D = -2.0 * (A * B.transpose());
  D.colwise() += a2;
  D.rowwise() += b2.transpose();
  D = D.cwiseMax(0.0);
  return push(std::move(D), [a, b](Tape& t, const Matrix& g) {
    const Matrix& A = t.val(a);
    const Matrix& B = t.val(b);
    // d D_ij / d a_i = 2 (a_i - b_j);  d D_ij / d b_j = 2 (b_j - a_i)
    const Vector grow = g.rowwise().sum();
    const Vector gcol = g.colwise().sum().transpose();
    t.adj(a.id) += 2.0 * (grow.asDiagonal() * A - g * B);
    t.adj(b.id) += 2.0 * (gcol.asDiagonal() * B - g.transpose() * A);
  });
}

Var sum_sq(Tape& t, Var a) { return t.sum(t.mul(a, a)); }

Var col_sums(Tape& t, Var a) {
  Var ones = t.constant(Matrix::Ones(1, t.val(a).rows()));
  return t.matmul(ones, a);
}

Var row_sums(Tape& t, Var a) {
  Var ones = t.constant(Matrix::Ones(t.val(a).cols(), 1));
  return t.matmul(a, ones);
}

Var col_sums_sq(Tape& t, Var a) { return t.transpose(col_sums(t, t.mul(a, a))); }

Var broadcast_col(Tape& t, Var v, int ncols) {
  Var ones = t.constant(Matrix::Ones(1, ncols));
  return t.matmul(v, ones);
}

}  // namespace svgpc::ad
