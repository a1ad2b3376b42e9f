#pragma once

#include <filesystem>

#include "mgmc/graph.hpp"

namespace mgmc::spectral {

/// Graph Fourier transform: projection onto the Laplacian eigenbasis.
Vector gft(const EigenDecomposition& eig, const Vector& x);
Vector igft(const EigenDecomposition& eig, const Vector& xhat);

/// Spectral-domain convolution via elementwise product of transforms.
/// Reference path, used as a test oracle only.
Vector spectral_convolve_ref(const Vector& x, const Vector& y,
                             const EigenDecomposition& eig);

/// Chebyshev filter sum_{j=0}^{p} theta_j T_j(L~) X via the three-term
/// recurrence; T_j(L~) is never materialized. Columns of X are channels.
Matrix cheb_apply_1d(const Matrix& rescaled, const Vector& theta,
                     const Matrix& X);

/// Two-dimensional Chebyshev filter
/// sum_{j,j'} Theta(j,j') T_j(L~_r) X T_j'(L~_c), evaluated with a row-side
/// Chebyshev stack followed by a column-side recurrence.
Matrix cheb_apply_2d(const Matrix& rescaled_rows, const Matrix& rescaled_cols,
                     const Matrix& theta, const Matrix& X);

/// Two-dimensional graph Fourier transform Phi_r^T X Phi_c and its inverse.
Matrix fourier_2d(const EigenDecomposition& eig_rows,
                  const EigenDecomposition& eig_cols, const Matrix& X);
Matrix inverse_fourier_2d(const EigenDecomposition& eig_rows,
                          const EigenDecomposition& eig_cols,
                          const Matrix& Xhat);

/// Scalar filter responses on a grid of rescaled eigenvalues in [-1, 1].
Vector filter_response_1d(const Vector& theta, const Vector& lambda_grid);
/// response(a, b) = sum_{j,j'} Theta(j,j') T_j(grid_r(a)) T_j'(grid_c(b)).
Matrix filter_response_2d(const Matrix& theta, const Vector& grid_rows,
                          const Vector& grid_cols);

/// CSV export, header "lambda,response_1..response_q"; one theta per column
/// of coefficient matrix thetas ((p+1) x q).
void export_filter_responses_1d(const Matrix& thetas, const Vector& grid,
                                const std::filesystem::path& path);
/// Long-form CSV, header "lambda_r,lambda_c,response".
void export_filter_response_2d(const Matrix& theta, const Vector& grid_rows,
                               const Vector& grid_cols,
                               const std::filesystem::path& path);

}  // namespace mgmc::spectral
