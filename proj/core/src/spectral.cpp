#include "mgmc/spectral.hpp"

#include <fstream>
#include <vector>

#include "text_io.hpp"

namespace mgmc::spectral {

namespace {

void check_dims(bool ok, const char* what) {
  if (!ok) throw InvalidInputError(std::string("dimension mismatch in ") + what);
}

}  // namespace

Vector gft(const EigenDecomposition& eig, const Vector& x) {
  check_dims(eig.eigenvectors.rows() == x.size(), "gft");
  return eig.eigenvectors.transpose() * x;
}

Vector igft(const EigenDecomposition& eig, const Vector& xhat) {
  check_dims(eig.eigenvectors.cols() == xhat.size(), "igft");
  return eig.eigenvectors * xhat;
}

Vector spectral_convolve_ref(const Vector& x, const Vector& y,
                             const EigenDecomposition& eig) {
  check_dims(x.size() == y.size(), "spectral_convolve_ref");
  return igft(eig, gft(eig, x).cwiseProduct(gft(eig, y)));
}

Matrix cheb_apply_1d(const Matrix& rescaled, const Vector& theta,
                     const Matrix& X) {
  if (theta.size() == 0) throw InvalidInputError("empty Chebyshev coefficients");
  check_dims(rescaled.rows() == rescaled.cols() && rescaled.rows() == X.rows(),
             "cheb_apply_1d");
  Matrix t_prev = X;  // T_0(L) X
  Matrix acc = theta(0) * t_prev;
  if (theta.size() == 1) return acc;
  Matrix t_cur = rescaled * X;  // T_1(L) X
  acc += theta(1) * t_cur;
  for (int j = 2; j < theta.size(); ++j) {
    Matrix t_next = 2.0 * (rescaled * t_cur) - t_prev;
    acc += theta(j) * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return acc;
}

Matrix cheb_apply_2d(const Matrix& rescaled_rows, const Matrix& rescaled_cols,
                     const Matrix& theta, const Matrix& X) {
  if (theta.size() == 0) throw InvalidInputError("empty Chebyshev coefficients");
  check_dims(rescaled_rows.rows() == X.rows() && rescaled_cols.rows() == X.cols(),
             "cheb_apply_2d");
  const int pr = static_cast<int>(theta.rows());
  const int pc = static_cast<int>(theta.cols());

  // Row-side stack T_j(L~_r) X for j = 0..p.
  std::vector<Matrix> row_stack(pr);
  row_stack[0] = X;
  if (pr > 1) row_stack[1] = rescaled_rows * X;
  for (int j = 2; j < pr; ++j)
    row_stack[j] = 2.0 * (rescaled_rows * row_stack[j - 1]) - row_stack[j - 2];

  Matrix acc = Matrix::Zero(X.rows(), X.cols());
  for (int j = 0; j < pr; ++j) {
    // Column-side recurrence on row_stack[j].
    Matrix t_prev = row_stack[j];
    acc += theta(j, 0) * t_prev;
    if (pc == 1) continue;
    Matrix t_cur = t_prev * rescaled_cols;
    acc += theta(j, 1) * t_cur;
    for (int k = 2; k < pc; ++k) {
      Matrix t_next = 2.0 * (t_cur * rescaled_cols) - t_prev;
      acc += theta(j, k) * t_next;
      t_prev = std::move(t_cur);
      t_cur = std::move(t_next);
    }
  }
  return acc;
}

Matrix fourier_2d(const EigenDecomposition& eig_rows,
                  const EigenDecomposition& eig_cols, const Matrix& X) {
  check_dims(eig_rows.eigenvectors.rows() == X.rows() &&
                 eig_cols.eigenvectors.rows() == X.cols(),
             "fourier_2d");
  return eig_rows.eigenvectors.transpose() * X * eig_cols.eigenvectors;
}

Matrix inverse_fourier_2d(const EigenDecomposition& eig_rows,
                          const EigenDecomposition& eig_cols,
                          const Matrix& Xhat) {
  check_dims(eig_rows.eigenvectors.cols() == Xhat.rows() &&
                 eig_cols.eigenvectors.cols() == Xhat.cols(),
             "inverse_fourier_2d");
  return eig_rows.eigenvectors * Xhat * eig_cols.eigenvectors.transpose();
}

Vector filter_response_1d(const Vector& theta, const Vector& lambda_grid) {
  Vector out = Vector::Zero(lambda_grid.size());
  for (int g = 0; g < lambda_grid.size(); ++g) {
    double lam = lambda_grid(g);
    double t_prev = 1.0, t_cur = lam, acc = theta(0) * t_prev;
    if (theta.size() > 1) acc += theta(1) * t_cur;
    for (int j = 2; j < theta.size(); ++j) {
      double t_next = 2.0 * lam * t_cur - t_prev;
      acc += theta(j) * t_next;
      t_prev = t_cur;
      t_cur = t_next;
    }
    out(g) = acc;
  }
  return out;
}

Matrix filter_response_2d(const Matrix& theta, const Vector& grid_rows,
                          const Vector& grid_cols) {
  Matrix out = Matrix::Zero(grid_rows.size(), grid_cols.size());
  for (int a = 0; a < grid_rows.size(); ++a)
    for (int b = 0; b < grid_cols.size(); ++b) {
      double acc = 0.0;
      double tr_prev = 1.0, tr_cur = grid_rows(a);
      for (int j = 0; j < theta.rows(); ++j) {
        double tj = j == 0 ? 1.0 : (j == 1 ? tr_cur : 0.0);
        if (j >= 2) {
          tj = 2.0 * grid_rows(a) * tr_cur - tr_prev;
          tr_prev = tr_cur;
          tr_cur = tj;
        }
        double tc_prev = 1.0, tc_cur = grid_cols(b);
        for (int k = 0; k < theta.cols(); ++k) {
          double tk = k == 0 ? 1.0 : (k == 1 ? tc_cur : 0.0);
          if (k >= 2) {
            tk = 2.0 * grid_cols(b) * tc_cur - tc_prev;
            tc_prev = tc_cur;
            tc_cur = tk;
          }
          acc += theta(j, k) * tj * tk;
        }
      }
      out(a, b) = acc;
    }
  return out;
}

void export_filter_responses_1d(const Matrix& thetas, const Vector& grid,
                                const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "lambda";
  for (int q = 0; q < thetas.cols(); ++q) out << ",response_" << (q + 1);
  out << "\n";
  std::vector<Vector> resp(thetas.cols());
  for (int q = 0; q < thetas.cols(); ++q)
    resp[q] = filter_response_1d(thetas.col(q), grid);
  for (int g = 0; g < grid.size(); ++g) {
    out << detail::format_double(grid(g));
    for (int q = 0; q < thetas.cols(); ++q)
      out << "," << detail::format_double(resp[q](g));
    out << "\n";
  }
}

void export_filter_response_2d(const Matrix& theta, const Vector& grid_rows,
                               const Vector& grid_cols,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "lambda_r,lambda_c,response\n";
  Matrix resp = filter_response_2d(theta, grid_rows, grid_cols);
  for (int a = 0; a < grid_rows.size(); ++a)
    for (int b = 0; b < grid_cols.size(); ++b)
      out << detail::format_double(grid_rows(a)) << ","
          << detail::format_double(grid_cols(b)) << ","
          << detail::format_double(resp(a, b)) << "\n";
}

}  // namespace mgmc::spectral
