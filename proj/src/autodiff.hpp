#pragma once

#include "common.hpp"

#include <functional>
#include <vector>

namespace svgpc::ad {

// Reverse-mode differentiation tape over dense matrices. Scalars are 1x1.
// A Var is an index into the tape; ops append nodes and record a pull
// closure that scatters the node's adjoint into its parents. Quadrature
// nodes, labels, data matrices and masks enter as constants and receive
// no gradient.
//
// The tape is built fresh for each evaluation and is not thread-safe;
// independent evaluations on separate tapes may run concurrently.

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  Var constant(Matrix v);
  Var constant_scalar(double v);
  Var input(Matrix v);  // a leaf whose adjoint will be read out

  const Matrix& val(Var x) const { return nodes_[x.id].value; }
  double scalar(Var x) const { return nodes_[x.id].value(0, 0); }
  const Matrix& adjoint(Var x) const { return nodes_[x.id].adjoint; }

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps the tape in
  // reverse. Adjoints of all nodes are valid afterwards.
  void backward(Var root);

  // elementwise, same shape
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);

  // matrix op scalar broadcasts; c is a plain double, s a 1x1 Var
  Var scale(Var a, double c);
  Var shift(Var a, double c);
  Var smul(Var a, Var s);
  Var sadd(Var a, Var s);

  Var matmul(Var a, Var b);
  Var transpose(Var a);

  // elementwise functions
  Var vexp(Var a);
  Var vlog(Var a);
  Var vlog1p(Var a);
  Var vsqrt(Var a);  // derivative treated as 0 where the argument is ~0
  Var clamp_min(Var a, double c);
  Var normal_cdf(Var a);
  Var log_normal_cdf(Var a);
  Var sigmoid(Var a);
  Var softplus(Var a);

  Var sum(Var a);  // 1x1

  // structured linear algebra
  Var chol(Var a);                  // lower Cholesky factor of an SPD matrix
  Var solve_lower(Var l, Var b);    // L^{-1} B
  Var solve_lower_t(Var l, Var b);  // L^{-T} B
  Var diag_vec(Var a);              // diagonal as a column vector
  Var add_scaled_identity(Var a, Var s);

  // lower-triangular matrix from packed storage (row-major lower triangle),
  // with the diagonal passed through exp so it stays positive
  Var lower_from_packed(Var packed, int m);

  // pairwise squared distances between rows of a and b (may be the same Var)
  Var sqdist(Var a, Var b);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix adjoint;
    std::function<void(Tape&, const Matrix&)> pull;  // adjoint -> parents
  };

  Var push(Matrix v, std::function<void(Tape&, const Matrix&)> pull = nullptr);
  Matrix& adj(int id) { return nodes_[id].adjoint; }

  std::vector<Node> nodes_;
};

// convenience reductions built from primitive ops
Var sum_sq(Tape& t, Var a);                    // sum of squared entries, 1x1
Var col_sums(Tape& t, Var a);                  // 1 x n row vector of column sums
Var row_sums(Tape& t, Var a);                  // m x 1 column vector of row sums
Var col_sums_sq(Tape& t, Var a);               // column sums of squares as n x 1
Var broadcast_col(Tape& t, Var v, int ncols);  // v * ones(1, ncols)

}  // namespace svgpc::ad
