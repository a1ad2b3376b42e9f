#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "mgmc/errors.hpp"

namespace mgmc::ad {

using Matrix = Eigen::MatrixXd;

class Tape;

/// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
};

/// Reverse-mode tape over dense double matrices. Nodes are appended in
/// topological order during the forward pass; backward() walks them in
/// reverse, accumulating adjoints. One tape per training step; a tape is
/// confined to a single thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Matrix value, bool requires_grad = false);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  // Primitives. Every op validates shapes and rejects non-finite results.
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var subtract(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var relu(Var a);  // subgradient at 0 is 0
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, int start, int count);
  Var reshape(Var a, int rows, int cols);  // column-major order preserved
  Var add_rowvec(Var a, Var row);          // broadcast a 1 x k row over rows
  Var sum(Var a);                          // 1x1 total
  Var frobenius_sq(Var a);
  Var masked_frobenius_sq(Var a, const Matrix& mask01);
  Var bilinear_trace(Var x, const Matrix& a);  // trace(X^T A X)

  /// Populates adjoints of every node reachable from root. Root must be 1x1.
  /// A second call without a fresh tape is an error.
  void backward(Var root);

  const Matrix& value(Var v) const { return node(v).value; }
  const Matrix& grad(Var v) const;
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    Matrix adjoint;  // allocated lazily during backward
    bool requires_grad = false;
    // Accumulates parent adjoints given this node's adjoint.
    std::function<void(Tape&, const Matrix&)> backprop;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  Var push(Matrix value, bool requires_grad,
           std::function<void(Tape&, const Matrix&)> backprop,
           const char* op_name);
  void accumulate(int id, const Matrix& g);
  void check_same_tape(Var a, const char* op) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

/// Builds a scalar graph from parameter matrices; returns the root Var.
using ScalarBuilder =
    std::function<Var(Tape&, const std::vector<Var>& params)>;

struct GradCheckEntry {
  int param;
  int row;
  int col;
  double analytic;
  double numeric;
  double rel_error;
};

struct GradCheckReport {
  bool pass = true;
  double max_rel_error = 0.0;
  GradCheckEntry worst{};
  int checked = 0;
};

/// Central-difference gradient check: per entry relative error
/// |g_ad - g_fd| / max(1, |g_fd|), pass iff all below tol.
GradCheckReport grad_check(const ScalarBuilder& f,
                           const std::vector<Matrix>& params,
                           double h = 1e-5, double tol = 1e-5);

}  // namespace mgmc::ad
