#pragma once

#include <vector>

#include "mgmc/graph.hpp"

namespace mgmc::baselines {

struct SvtResult {
  Matrix x;
  std::vector<double> objective;  // per iteration
  int iterations = 0;
};

/// Nuclear-norm completion by proximal gradient: a gradient step on the
/// masked least-squares term followed by singular-value soft-thresholding
/// with threshold tau*step.
SvtResult svt_complete(const Matrix& y, const Matrix& mask, double tau,
                       double step, int max_iters, double tol = 1e-10);

struct GmcResult {
  Matrix x;
  std::vector<double> objective;
  int iterations = 0;
};

/// Geometric matrix completion: gradient descent on the convex quadratic
/// tr(X^T Dr X) + tr(X Dc X^T) + mu/2 ||O.(X-Y)||_F^2. A non-positive lr
/// selects the safe step 1/L from the Laplacian spectral bounds.
GmcResult gmc_complete(const Matrix& y, const Matrix& mask,
                       const LaplacianOperator& lap_rows,
                       const LaplacianOperator& lap_cols, double mu,
                       double lr, int max_iters, double tol = 1e-12);

struct GralsOptions {
  int sweeps = 20;
  double cg_tol = 1e-10;
  int cg_max_iters = 500;
  /// Replaces the row-graph regularizer on W with 1/2 ||W||_F^2 so the
  /// W-subproblem stays well-posed when only the user graph is used.
  bool users_graph_only = false;
};

struct GralsResult {
  Matrix w;
  Matrix h;
  std::vector<double> objective;  // per half-sweep
  bool cg_converged = true;
};

/// Graph-regularized alternating minimization of
/// 1/2 tr(W^T Dr W) + 1/2 tr(H^T Dc H) + mu/2 ||O.(WH^T - Y)||_F^2,
/// each half-step solved by conjugate gradient on the normal equations.
GralsResult graph_reg_als(const Matrix& y, const Matrix& mask,
                          const LaplacianOperator& lap_rows,
                          const LaplacianOperator& lap_cols, double mu,
                          int rank, const GralsOptions& opts = {});

}  // namespace mgmc::baselines
