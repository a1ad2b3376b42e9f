#include "mgmc/baselines.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace mgmc::baselines {

namespace {

double nuclear_norm(const Matrix& x) {
  Eigen::BDCSVD<Matrix> svd(x);
  return svd.singularValues().sum();
}

}  // namespace

SvtResult svt_complete(const Matrix& y, const Matrix& mask, double tau,
                       double step, int max_iters, double tol) {
  if (mask.sum() <= 0.0) throw InvalidInputError("svt: empty observation mask");
  if (step <= 0.0) throw InvalidInputError("svt: step must be positive");
  SvtResult res;
  res.x = Matrix::Zero(y.rows(), y.cols());
  const double thresh = tau * step;
  for (int it = 0; it < max_iters; ++it) {
    Matrix g = res.x - step * mask.cwiseProduct(res.x - y);
    Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
      throw NumericError("svt: SVD failed");
    Vector s = (svd.singularValues().array() - thresh).max(0.0).matrix();
    Matrix x_new = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    double delta = (x_new - res.x).norm() / std::max(1.0, res.x.norm());
    res.x = std::move(x_new);
    res.objective.push_back(tau * nuclear_norm(res.x) +
                            0.5 * mask.cwiseProduct(res.x - y).squaredNorm());
    res.iterations = it + 1;
    if (delta < tol) break;
  }
  return res;
}

GmcResult gmc_complete(const Matrix& y, const Matrix& mask,
                       const LaplacianOperator& lap_rows,
                       const LaplacianOperator& lap_cols, double mu,
                       double lr, int max_iters, double tol) {
  if (mask.sum() <= 0.0) throw InvalidInputError("gmc: empty observation mask");
  if (lr <= 0.0)
    lr = 1.0 / (2.0 * lap_rows.lambda_max + 2.0 * lap_cols.lambda_max + mu);

  auto objective = [&](const Matrix& x) {
    return (x.transpose() * lap_rows.delta * x).trace() +
           (x * lap_cols.delta * x.transpose()).trace() +
           0.5 * mu * mask.cwiseProduct(x - y).squaredNorm();
  };

  GmcResult res;
  res.x = mask.cwiseProduct(y);
  double prev_obj = objective(res.x);
  res.objective.push_back(prev_obj);
  for (int it = 0; it < max_iters; ++it) {
    Matrix grad = 2.0 * (lap_rows.delta * res.x) +
                  2.0 * (res.x * lap_cols.delta) +
                  mu * mask.cwiseProduct(res.x - y);
    res.x -= lr * grad;
    double obj = objective(res.x);
    if (!std::isfinite(obj) || obj > 1e12)
      throw NumericError("gmc: diverged at iteration " + std::to_string(it));
    res.objective.push_back(obj);
    res.iterations = it + 1;
    double grad_norm = grad.norm();
    if (grad_norm < tol * std::max(1.0, res.x.norm())) break;
    prev_obj = obj;
  }
  return res;
}

namespace {

// CG on the SPD operator op, matrix unknowns under the trace inner product.
// Returns false when the residual tolerance was not reached.
template <typename Op>
bool conjugate_gradient(const Op& op, const Matrix& rhs, Matrix& x, double tol,
                        int max_iters) {
  Matrix r = rhs - op(x);
  Matrix p = r;
  double rs = r.squaredNorm();
  const double target = tol * tol * std::max(1.0, rhs.squaredNorm());
  for (int it = 0; it < max_iters; ++it) {
    if (rs <= target) return true;
    Matrix ap = op(p);
    double denom = (p.array() * ap.array()).sum();
    if (denom <= 0.0) return false;  // lost positive-definiteness numerically
    double alpha = rs / denom;
    x += alpha * p;
    r -= alpha * ap;
    double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return rs <= target;
}

}  // namespace

GralsResult graph_reg_als(const Matrix& y, const Matrix& mask,
                          const LaplacianOperator& lap_rows,
                          const LaplacianOperator& lap_cols, double mu,
                          int rank, const GralsOptions& opts) {
  if (rank < 1) throw InvalidInputError("grals: rank must be >= 1");
  const int m = static_cast<int>(y.rows());
  const int n = static_cast<int>(y.cols());

  GralsResult res;
  if (mu == 0.0) {
    // the regularizers alone are minimized by zero factors
    res.w = Matrix::Zero(m, rank);
    res.h = Matrix::Zero(n, rank);
    res.objective.push_back(0.0);
    return res;
  }

  Matrix reg_w_mat =
      opts.users_graph_only ? Matrix::Identity(m, m) : lap_rows.delta;

  auto objective = [&](const Matrix& w, const Matrix& h) {
    return 0.5 * (w.transpose() * reg_w_mat * w).trace() +
           0.5 * (h.transpose() * lap_cols.delta * h).trace() +
           0.5 * mu * mask.cwiseProduct(w * h.transpose() - y).squaredNorm();
  };

  // warm start from the truncated SVD of the masked fill
  Matrix filled = mask.cwiseProduct(y);
  Eigen::BDCSVD<Matrix> svd(filled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  int r0 = std::min<int>(rank, static_cast<int>(svd.singularValues().size()));
  res.w = Matrix::Zero(m, rank);
  res.h = Matrix::Zero(n, rank);
  for (int k = 0; k < r0; ++k) {
    double s = std::sqrt(svd.singularValues()(k));
    res.w.col(k) = svd.matrixU().col(k) * s;
    res.h.col(k) = svd.matrixV().col(k) * s;
  }

  res.objective.push_back(objective(res.w, res.h));
  for (int sweep = 0; sweep < opts.sweeps; ++sweep) {
    {  // W-subproblem, H fixed
      const Matrix& h = res.h;
      auto op = [&](const Matrix& w) -> Matrix {
        return reg_w_mat * w + mu * mask.cwiseProduct(w * h.transpose()) * h;
      };
      Matrix rhs = mu * mask.cwiseProduct(y) * h;
      if (!conjugate_gradient(op, rhs, res.w, opts.cg_tol, opts.cg_max_iters))
        res.cg_converged = false;
      res.objective.push_back(objective(res.w, res.h));
    }
    {  // H-subproblem, W fixed
      const Matrix& w = res.w;
      auto op = [&](const Matrix& h) -> Matrix {
        return lap_cols.delta * h +
               mu * mask.cwiseProduct(w * h.transpose()).transpose() * w;
      };
      Matrix rhs = mu * mask.cwiseProduct(y).transpose() * w;
      if (!conjugate_gradient(op, rhs, res.h, opts.cg_tol, opts.cg_max_iters))
        res.cg_converged = false;
      res.objective.push_back(objective(res.w, res.h));
    }
  }
  return res;
}

}  // namespace mgmc::baselines
