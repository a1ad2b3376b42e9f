#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <vector>

#include "mgmc/errors.hpp"

namespace mgmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Undirected weighted graph. Each edge is stored once with i < j; the
/// reverse direction is implied. No self-loops, weights strictly positive.
struct Edge {
  int i = 0;
  int j = 0;
  double w = 1.0;
};

struct Graph {
  int n_vertices = 0;
  std::vector<Edge> edges;

  /// Throws InvalidInputError on self-loops, bad indices, or w <= 0.
  void validate() const;

  /// Dense symmetric adjacency matrix W.
  Matrix adjacency() const;

  /// Weighted degree of each vertex.
  Vector degrees() const;
};

/// Symmetric-normalized Laplacian I - D^{-1/2} W D^{-1/2} together with its
/// rescaled form 2/lambda_max * Delta - I whose spectrum lies in [-1, 1].
/// Rows of isolated vertices are identity rows (the D^{-1/2} entry is 0).
struct LaplacianOperator {
  int size = 0;
  Matrix delta;
  double lambda_max = 0.0;
  Matrix rescaled;
};

struct EigenDecomposition {
  Vector eigenvalues;   // ascending
  Matrix eigenvectors;  // orthonormal columns
};

/// Unweighted k-nearest-neighbor graph in Euclidean feature space,
/// symmetrized by union (edge kept if either endpoint selects the other).
Graph build_knn_graph(const std::vector<Vector>& features, int k);

/// When exact_lambda_max is false the safe bound lambda_max = 2 is used
/// instead of a dense eigensolve (valid for the normalized Laplacian).
LaplacianOperator laplacian(const Graph& g, bool exact_lambda_max = true);

/// Dense symmetric eigendecomposition. Throws CapacityError above the limit;
/// the Chebyshev recurrence path needs no eigendecomposition at any size.
EigenDecomposition eigendecompose(const LaplacianOperator& L,
                                  int dense_limit = 5000);

/// Edge-list text format: header "#vertices=<n>", then "i<TAB>j<TAB>w" per
/// undirected edge, listed once, 0-based. Transparent .gz read support.
Graph read_edge_list(const std::filesystem::path& path);
void write_edge_list(const Graph& g, const std::filesystem::path& path);

}  // namespace mgmc
