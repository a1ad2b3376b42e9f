#include <random>

#include "doctest.h"
#include "mgmc/spectral.hpp"

using namespace mgmc;
using namespace mgmc::spectral;

namespace {

Graph random_graph(int n, double edge_prob, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  Graph g;
  g.n_vertices = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < edge_prob) g.edges.push_back({i, j, w(rng)});
  return g;
}

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = gauss(rng);
  return m;
}

// Spectral-domain oracle for the 1-D Chebyshev filter.
Matrix cheb_spectral_oracle_1d(const LaplacianOperator& L, const Vector& theta,
                               const Matrix& X) {
  auto eig = eigendecompose(L);
  Vector lam_rescaled =
      (2.0 / L.lambda_max) * eig.eigenvalues.array() - 1.0;
  Vector response = filter_response_1d(theta, lam_rescaled);
  return eig.eigenvectors * response.asDiagonal() *
         eig.eigenvectors.transpose() * X;
}

// Spectral-domain oracle for the 2-D filter: Phi_r (G o Xhat) Phi_c^T.
Matrix cheb_spectral_oracle_2d(const LaplacianOperator& Lr,
                               const LaplacianOperator& Lc,
                               const Matrix& theta, const Matrix& X) {
  auto eig_r = eigendecompose(Lr);
  auto eig_c = eigendecompose(Lc);
  Vector lr = (2.0 / Lr.lambda_max) * eig_r.eigenvalues.array() - 1.0;
  Vector lc = (2.0 / Lc.lambda_max) * eig_c.eigenvalues.array() - 1.0;
  Matrix response = filter_response_2d(theta, lr, lc);
  Matrix xhat = fourier_2d(eig_r, eig_c, X);
  return inverse_fourier_2d(eig_r, eig_c, response.cwiseProduct(xhat));
}

}  // namespace

TEST_CASE("gft: identity basis and eigenvector projection") {
  Graph g{4, {}};
  auto eig = eigendecompose(laplacian(g));
  Vector x(4);
  x << 1, 2, 3, 4;
  // edgeless graph: Phi orthonormal; Parseval and round trip
  CHECK((igft(eig, gft(eig, x)) - x).cwiseAbs().maxCoeff() < 1e-10);

  std::mt19937_64 rng(2);
  auto g8 = random_graph(8, 0.5, rng);
  auto eig8 = eigendecompose(laplacian(g8));
  Vector phi1 = eig8.eigenvectors.col(0);
  Vector xhat = gft(eig8, phi1);
  CHECK(std::abs(xhat(0) - 1.0) < 1e-10);
  CHECK(xhat.tail(7).cwiseAbs().maxCoeff() < 1e-10);

  Vector r = random_matrix(8, 1, rng).col(0);
  CHECK(gft(eig8, r).norm() == doctest::Approx(r.norm()).epsilon(1e-10));
}

TEST_CASE("spectral_convolve_ref: identity multiplier and single mode") {
  std::mt19937_64 rng(3);
  auto g = random_graph(6, 0.6, rng);
  auto eig = eigendecompose(laplacian(g));
  Vector x = random_matrix(6, 1, rng).col(0);

  Vector y_identity = igft(eig, Vector::Ones(6));
  CHECK((spectral_convolve_ref(x, y_identity, eig) - x).cwiseAbs().maxCoeff() <
        1e-10);

  Vector ek = Vector::Zero(6);
  ek(2) = 1.0;
  Vector y_mode = igft(eig, ek);
  Vector expected = gft(eig, x)(2) * eig.eigenvectors.col(2);
  CHECK((spectral_convolve_ref(x, y_mode, eig) - expected).cwiseAbs().maxCoeff() <
        1e-10);

  Vector y = random_matrix(6, 1, rng).col(0);
  CHECK((spectral_convolve_ref(x, y, eig) - spectral_convolve_ref(y, x, eig))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

TEST_CASE("cheb_apply_1d: T0 and T1 coefficients") {
  std::mt19937_64 rng(4);
  auto g = random_graph(7, 0.5, rng);
  auto L = laplacian(g);
  Matrix X = random_matrix(7, 3, rng);

  Vector t0 = Vector::Zero(4);
  t0(0) = 1.0;
  CHECK((cheb_apply_1d(L.rescaled, t0, X) - X).cwiseAbs().maxCoeff() < 1e-12);

  Vector t1 = Vector::Zero(4);
  t1(1) = 1.0;
  CHECK((cheb_apply_1d(L.rescaled, t1, X) - L.rescaled * X).cwiseAbs().maxCoeff() <
        1e-12);

  Vector empty;
  CHECK_THROWS_AS(cheb_apply_1d(L.rescaled, empty, X), InvalidInputError);
}

TEST_CASE("cheb_apply_1d: matches the spectral oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto g = random_graph(8, 0.5, rng);
    auto L = laplacian(g);
    Vector theta = random_matrix(6, 1, rng).col(0);  // p = 5
    Matrix X = random_matrix(8, 2, rng);
    Matrix got = cheb_apply_1d(L.rescaled, theta, X);
    Matrix expected = cheb_spectral_oracle_1d(L, theta, X);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("cheb_apply_2d: theta_00 identity and rank-1 separability") {
  std::mt19937_64 rng(6);
  auto gr = random_graph(6, 0.5, rng);
  auto gc = random_graph(7, 0.5, rng);
  auto Lr = laplacian(gr);
  auto Lc = laplacian(gc);
  Matrix X = random_matrix(6, 7, rng);

  Matrix theta = Matrix::Zero(4, 4);
  theta(0, 0) = 1.0;
  CHECK((cheb_apply_2d(Lr.rescaled, Lc.rescaled, theta, X) - X)
            .cwiseAbs()
            .maxCoeff() < 1e-12);

  // rank-1 coefficients factor into row and column 1-D passes
  Vector a = random_matrix(4, 1, rng).col(0);
  Vector b = random_matrix(4, 1, rng).col(0);
  Matrix rank1 = a * b.transpose();
  Matrix joint = cheb_apply_2d(Lr.rescaled, Lc.rescaled, rank1, X);
  Matrix rows_then_cols = cheb_apply_1d(
      Lc.rescaled, b, cheb_apply_1d(Lr.rescaled, a, X).transpose())
                              .transpose();
  CHECK((joint - rows_then_cols).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("cheb_apply_2d: matches the 2-D spectral oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    auto gr = random_graph(6, 0.5, rng);
    auto gc = random_graph(7, 0.5, rng);
    auto Lr = laplacian(gr);
    auto Lc = laplacian(gc);
    Matrix theta = random_matrix(4, 4, rng);  // p = 3
    Matrix X = random_matrix(6, 7, rng);
    Matrix got = cheb_apply_2d(Lr.rescaled, Lc.rescaled, theta, X);
    Matrix expected = cheb_spectral_oracle_2d(Lr, Lc, theta, X);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("fourier_2d: unitarity and mode projection") {
  std::mt19937_64 rng(8);
  auto gr = random_graph(5, 0.6, rng);
  auto gc = random_graph(6, 0.6, rng);
  auto eig_r = eigendecompose(laplacian(gr));
  auto eig_c = eigendecompose(laplacian(gc));

  Matrix X = random_matrix(5, 6, rng);
  Matrix xhat = fourier_2d(eig_r, eig_c, X);
  CHECK(xhat.norm() == doctest::Approx(X.norm()).epsilon(1e-10));
  CHECK((inverse_fourier_2d(eig_r, eig_c, xhat) - X).cwiseAbs().maxCoeff() <
        1e-10);

  Matrix outer = eig_r.eigenvectors.col(0) * eig_c.eigenvectors.col(0).transpose();
  Matrix ohat = fourier_2d(eig_r, eig_c, outer);
  CHECK(std::abs(ohat(0, 0) - 1.0) < 1e-10);
  CHECK(ohat.cwiseAbs().sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("filter_response: constants, linear term, polynomial cross-check") {
  Vector grid(5);
  grid << -1.0, -0.5, 0.0, 0.5, 1.0;

  Vector constant = Vector::Zero(6);
  constant(0) = 1.0;
  CHECK((filter_response_1d(constant, grid).array() - 1.0).abs().maxCoeff() <
        1e-15);

  Vector linear = Vector::Zero(6);
  linear(1) = 1.0;
  CHECK(filter_response_1d(linear, grid)(3) == doctest::Approx(0.5));

  // Horner-style direct evaluation oracle using explicit T_j values
  std::mt19937_64 rng(9);
  Vector theta = random_matrix(6, 1, rng).col(0);
  Vector got = filter_response_1d(theta, grid);
  for (int g = 0; g < grid.size(); ++g) {
    double lam = grid(g);
    std::vector<double> t{1.0, lam};
    for (int j = 2; j < 6; ++j) t.push_back(2.0 * lam * t[j - 1] - t[j - 2]);
    double expected = 0.0;
    for (int j = 0; j < 6; ++j) expected += theta(j) * t[j];
    CHECK(std::abs(got(g) - expected) < 1e-12);
  }
}

TEST_CASE("property: linearity of cheb_apply") {
  std::mt19937_64 rng(10);
  auto g = random_graph(7, 0.5, rng);
  auto L = laplacian(g);
  Vector theta = random_matrix(5, 1, rng).col(0);
  Matrix X = random_matrix(7, 2, rng);
  Matrix Y = random_matrix(7, 2, rng);
  double alpha = 0.7, beta = -1.3;
  Matrix lhs = cheb_apply_1d(L.rescaled, theta, alpha * X + beta * Y);
  Matrix rhs = alpha * cheb_apply_1d(L.rescaled, theta, X) +
               beta * cheb_apply_1d(L.rescaled, theta, Y);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("property: degree-p filters are p-hop local") {
  // path graph: vertex 0's p-hop ball is vertices 0..p
  const int n = 12, p = 3;
  Graph g;
  g.n_vertices = n;
  for (int i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, 1.0});
  auto L = laplacian(g);
  std::mt19937_64 rng(11);
  Vector theta = random_matrix(p + 1, 1, rng).col(0);
  Matrix X = random_matrix(n, 1, rng);
  Matrix X_zeroed = X;
  for (int i = p + 1; i < n; ++i) X_zeroed(i, 0) = 0.0;  // outside 0's ball
  double full = cheb_apply_1d(L.rescaled, theta, X)(0, 0);
  double local = cheb_apply_1d(L.rescaled, theta, X_zeroed)(0, 0);
  CHECK(std::abs(full - local) < 1e-12);
}
