#include "mgmc/autodiff.hpp"

#include <cmath>

namespace mgmc::ad {

const Tape::Node& Tape::node(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= size())
    throw InvalidInputError("Var does not belong to this tape");
  return nodes_[v.id];
}

Tape::Node& Tape::node(Var v) {
  return const_cast<Node&>(static_cast<const Tape*>(this)->node(v));
}

void Tape::check_same_tape(Var a, const char* op) const {
  if (a.tape != this)
    throw InvalidInputError(std::string(op) + ": Var from a different tape");
}

Var Tape::push(Matrix value, bool requires_grad,
               std::function<void(Tape&, const Matrix&)> backprop,
               const char* op_name) {
  if (!value.allFinite())
    throw NumericError(std::string("non-finite result in op '") + op_name + "'");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{this, size() - 1};
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[id];
  if (n.adjoint.size() == 0)
    n.adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
  n.adjoint += g;
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr, "leaf");
}

Var Tape::matmul(Var a, Var b) {
  check_same_tape(a, "matmul");
  check_same_tape(b, "matmul");
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.cols() != B.rows()) throw InvalidInputError("matmul: inner dims differ");
  bool rg = node(a).requires_grad || node(b).requires_grad;
  int ai = a.id, bi = b.id;
  return push(A * B, rg,
              [ai, bi](Tape& t, const Matrix& g) {
                if (t.nodes_[ai].requires_grad || t.nodes_[ai].backprop)
                  t.accumulate(ai, g * t.nodes_[bi].value.transpose());
                if (t.nodes_[bi].requires_grad || t.nodes_[bi].backprop)
                  t.accumulate(bi, t.nodes_[ai].value.transpose() * g);
              },
              "matmul");
}

Var Tape::transpose(Var a) {
  check_same_tape(a, "transpose");
  int ai = a.id;
  return push(node(a).value.transpose(), node(a).requires_grad,
              [ai](Tape& t, const Matrix& g) { t.accumulate(ai, g.transpose()); },
              "transpose");
}

Var Tape::add(Var a, Var b) {
  check_same_tape(a, "add");
  check_same_tape(b, "add");
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw InvalidInputError("add: shape mismatch");
  int ai = a.id, bi = b.id;
  return push(A + B, node(a).requires_grad || node(b).requires_grad,
              [ai, bi](Tape& t, const Matrix& g) {
                t.accumulate(ai, g);
                t.accumulate(bi, g);
              },
              "add");
}

Var Tape::subtract(Var a, Var b) {
  check_same_tape(a, "subtract");
  check_same_tape(b, "subtract");
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw InvalidInputError("subtract: shape mismatch");
  int ai = a.id, bi = b.id;
  return push(A - B, node(a).requires_grad || node(b).requires_grad,
              [ai, bi](Tape& t, const Matrix& g) {
                t.accumulate(ai, g);
                t.accumulate(bi, -g);
              },
              "subtract");
}

Var Tape::hadamard(Var a, Var b) {
  check_same_tape(a, "hadamard");
  check_same_tape(b, "hadamard");
  const Matrix& A = node(a).value;
  const Matrix& B = node(b).value;
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw InvalidInputError("hadamard: shape mismatch");
  int ai = a.id, bi = b.id;
  return push(A.cwiseProduct(B), node(a).requires_grad || node(b).requires_grad,
              [ai, bi](Tape& t, const Matrix& g) {
                t.accumulate(ai, g.cwiseProduct(t.nodes_[bi].value));
                t.accumulate(bi, g.cwiseProduct(t.nodes_[ai].value));
              },
              "hadamard");
}

Var Tape::scale(Var a, double s) {
  check_same_tape(a, "scale");
  int ai = a.id;
  return push(s * node(a).value, node(a).requires_grad,
              [ai, s](Tape& t, const Matrix& g) { t.accumulate(ai, s * g); },
              "scale");
}

Var Tape::relu(Var a) {
  check_same_tape(a, "relu");
  int ai = a.id;
  return push(node(a).value.cwiseMax(0.0), node(a).requires_grad,
              [ai](Tape& t, const Matrix& g) {
                const Matrix& x = t.nodes_[ai].value;
                t.accumulate(
                    ai, (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g));
              },
              "relu");
}

Var Tape::sigmoid(Var a) {
  check_same_tape(a, "sigmoid");
  Matrix y = (1.0 / (1.0 + (-node(a).value.array()).exp())).matrix();
  int ai = a.id;
  Var out = push(std::move(y), node(a).requires_grad, nullptr, "sigmoid");
  int oi = out.id;
  nodes_[oi].backprop = [ai, oi](Tape& t, const Matrix& g) {
    const Matrix& s = t.nodes_[oi].value;
    t.accumulate(ai, (s.array() * (1.0 - s.array()) * g.array()).matrix());
  };
  return out;
}

Var Tape::tanh(Var a) {
  check_same_tape(a, "tanh");
  Matrix y = node(a).value.array().tanh().matrix();
  int ai = a.id;
  Var out = push(std::move(y), node(a).requires_grad, nullptr, "tanh");
  int oi = out.id;
  nodes_[oi].backprop = [ai, oi](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[oi].value;
    t.accumulate(ai, ((1.0 - y.array().square()) * g.array()).matrix());
  };
  return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidInputError("concat_cols: no inputs");
  Eigen::Index rows = node(parts[0]).value.rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    check_same_tape(p, "concat_cols");
    if (node(p).value.rows() != rows)
      throw InvalidInputError("concat_cols: row count mismatch");
    cols += node(p).value.cols();
    rg = rg || node(p).requires_grad;
  }
  Matrix out(rows, cols);
  Eigen::Index at = 0;
  std::vector<std::pair<int, int>> spans;  // (id, width)
  for (Var p : parts) {
    Eigen::Index w = node(p).value.cols();
    out.middleCols(at, w) = node(p).value;
    spans.emplace_back(p.id, static_cast<int>(w));
    at += w;
  }
  return push(std::move(out), rg,
              [spans](Tape& t, const Matrix& g) {
                int at = 0;
                for (auto [id, w] : spans) {
                  t.accumulate(id, g.middleCols(at, w));
                  at += w;
                }
              },
              "concat_cols");
}

Var Tape::slice_cols(Var a, int start, int count) {
  check_same_tape(a, "slice_cols");
  const Matrix& A = node(a).value;
  if (start < 0 || count < 0 || start + count > A.cols())
    throw InvalidInputError("slice_cols: range out of bounds");
  int ai = a.id;
  return push(A.middleCols(start, count), node(a).requires_grad,
              [ai, start, count](Tape& t, const Matrix& g) {
                const Matrix& A = t.nodes_[ai].value;
                Matrix ga = Matrix::Zero(A.rows(), A.cols());
                ga.middleCols(start, count) = g;
                t.accumulate(ai, ga);
              },
              "slice_cols");
}

Var Tape::reshape(Var a, int rows, int cols) {
  check_same_tape(a, "reshape");
  const Matrix& A = node(a).value;
  if (rows * static_cast<Eigen::Index>(cols) != A.size())
    throw InvalidInputError("reshape: element count mismatch");
  Matrix out = Eigen::Map<const Matrix>(A.data(), rows, cols);
  int ai = a.id;
  Eigen::Index ar = A.rows(), ac = A.cols();
  return push(std::move(out), node(a).requires_grad,
              [ai, ar, ac](Tape& t, const Matrix& g) {
                t.accumulate(ai, Eigen::Map<const Matrix>(g.data(), ar, ac));
              },
              "reshape");
}

Var Tape::add_rowvec(Var a, Var row) {
  check_same_tape(a, "add_rowvec");
  check_same_tape(row, "add_rowvec");
  const Matrix& A = node(a).value;
  const Matrix& R = node(row).value;
  if (R.rows() != 1 || R.cols() != A.cols())
    throw InvalidInputError("add_rowvec: row must be 1 x cols(a)");
  int ai = a.id, ri = row.id;
  return push(A.rowwise() + R.row(0), node(a).requires_grad || node(row).requires_grad,
              [ai, ri](Tape& t, const Matrix& g) {
                t.accumulate(ai, g);
                t.accumulate(ri, g.colwise().sum());
              },
              "add_rowvec");
}

Var Tape::sum(Var a) {
  check_same_tape(a, "sum");
  const Matrix& A = node(a).value;
  Matrix out(1, 1);
  out(0, 0) = A.sum();
  int ai = a.id;
  Eigen::Index r = A.rows(), c = A.cols();
  return push(std::move(out), node(a).requires_grad,
              [ai, r, c](Tape& t, const Matrix& g) {
                t.accumulate(ai, Matrix::Constant(r, c, g(0, 0)));
              },
              "sum");
}

Var Tape::frobenius_sq(Var a) {
  check_same_tape(a, "frobenius_sq");
  const Matrix& A = node(a).value;
  Matrix out(1, 1);
  out(0, 0) = A.squaredNorm();
  int ai = a.id;
  return push(std::move(out), node(a).requires_grad,
              [ai](Tape& t, const Matrix& g) {
                t.accumulate(ai, 2.0 * g(0, 0) * t.nodes_[ai].value);
              },
              "frobenius_sq");
}

Var Tape::masked_frobenius_sq(Var a, const Matrix& mask01) {
  check_same_tape(a, "masked_frobenius_sq");
  const Matrix& A = node(a).value;
  if (mask01.rows() != A.rows() || mask01.cols() != A.cols())
    throw InvalidInputError("masked_frobenius_sq: mask shape mismatch");
  Matrix out(1, 1);
  out(0, 0) = mask01.cwiseProduct(A).squaredNorm();
  int ai = a.id;
  Matrix mask = mask01;
  return push(std::move(out), node(a).requires_grad,
              [ai, mask](Tape& t, const Matrix& g) {
                t.accumulate(ai, 2.0 * g(0, 0) *
                                     mask.cwiseProduct(mask.cwiseProduct(
                                         t.nodes_[ai].value)));
              },
              "masked_frobenius_sq");
}

Var Tape::bilinear_trace(Var x, const Matrix& a) {
  check_same_tape(x, "bilinear_trace");
  const Matrix& X = node(x).value;
  if (a.rows() != X.rows() || a.cols() != X.rows())
    throw InvalidInputError("bilinear_trace: A must be rows(X) x rows(X)");
  Matrix out(1, 1);
  out(0, 0) = (X.transpose() * a * X).trace();
  int xi = x.id;
  Matrix a_sym_twice = a + a.transpose();
  return push(std::move(out), node(x).requires_grad,
              [xi, a_sym_twice](Tape& t, const Matrix& g) {
                t.accumulate(xi, g(0, 0) * (a_sym_twice * t.nodes_[xi].value));
              },
              "bilinear_trace");
}

void Tape::backward(Var root) {
  check_same_tape(root, "backward");
  if (backward_done_)
    throw InvalidInputError("backward called twice on one tape");
  const Matrix& rv = node(root).value;
  if (rv.rows() != 1 || rv.cols() != 1)
    throw InvalidInputError("backward root must be a 1x1 scalar");
  backward_done_ = true;
  accumulate(root.id, Matrix::Ones(1, 1));
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.adjoint.size() == 0 || !n.backprop) continue;
    n.backprop(*this, n.adjoint);
  }
}

const Matrix& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.adjoint.size() == 0) {
    static const Matrix empty;
    if (!backward_done_)
      throw InvalidInputError("grad requested before backward");
    // unreachable leaves have zero gradient
    const_cast<Node&>(n).adjoint = Matrix::Zero(n.value.rows(), n.value.cols());
  }
  return n.adjoint;
}

GradCheckReport grad_check(const ScalarBuilder& f,
                           const std::vector<Matrix>& params, double h,
                           double tol) {
  std::vector<Matrix> p = params;

  auto eval = [&](const std::vector<Matrix>& pp) {
    Tape t;
    std::vector<Var> vars;
    vars.reserve(pp.size());
    for (const auto& m : pp) vars.push_back(t.leaf(m, true));
    Var root = f(t, vars);
    return t.value(root)(0, 0);
  };

  Tape t;
  std::vector<Var> vars;
  for (const auto& m : p) vars.push_back(t.leaf(m, true));
  Var root = f(t, vars);
  t.backward(root);
  std::vector<Matrix> analytic;
  for (Var v : vars) analytic.push_back(t.grad(v));

  GradCheckReport rep;
  for (size_t k = 0; k < p.size(); ++k) {
    for (Eigen::Index r = 0; r < p[k].rows(); ++r) {
      for (Eigen::Index c = 0; c < p[k].cols(); ++c) {
        double orig = p[k](r, c);
        p[k](r, c) = orig + h;
        double fp = eval(p);
        p[k](r, c) = orig - h;
        double fm = eval(p);
        p[k](r, c) = orig;
        double fd = (fp - fm) / (2.0 * h);
        double ga = analytic[k](r, c);
        double rel = std::abs(ga - fd) / std::max(1.0, std::abs(fd));
        ++rep.checked;
        if (rel > rep.max_rel_error) {
          rep.max_rel_error = rel;
          rep.worst = {static_cast<int>(k), static_cast<int>(r),
                       static_cast<int>(c), ga, fd, rel};
        }
      }
    }
  }
  rep.pass = rep.max_rel_error < tol;
  return rep;
}

}  // namespace mgmc::ad
