#include "mgmc/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "text_io.hpp"

namespace mgmc {

void Graph::validate() const {
  if (n_vertices <= 0) throw InvalidInputError("graph must have >= 1 vertex");
  for (const auto& e : edges) {
    if (e.i == e.j) throw InvalidInputError("self-loop on vertex " + std::to_string(e.i));
    if (e.i < 0 || e.j < 0 || e.i >= n_vertices || e.j >= n_vertices)
      throw InvalidInputError("edge endpoint out of range");
    if (!(e.w > 0.0) || !std::isfinite(e.w))
      throw InvalidInputError("edge weight must be finite and > 0");
  }
}

Matrix Graph::adjacency() const {
  Matrix W = Matrix::Zero(n_vertices, n_vertices);
  for (const auto& e : edges) {
    W(e.i, e.j) = e.w;
    W(e.j, e.i) = e.w;
  }
  return W;
}

Vector Graph::degrees() const {
  Vector d = Vector::Zero(n_vertices);
  for (const auto& e : edges) {
    d(e.i) += e.w;
    d(e.j) += e.w;
  }
  return d;
}

Graph build_knn_graph(const std::vector<Vector>& features, int k) {
  const int n = static_cast<int>(features.size());
  if (n < 2) throw InvalidInputError("need at least 2 feature vectors");
  if (k < 1 || k >= n) throw InvalidInputError("require 1 <= k < n");
  for (const auto& f : features)
    if (!f.allFinite()) throw InvalidInputError("non-finite feature vector");

  std::set<std::pair<int, int>> selected;
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      dist[j] = {(features[i] - features[j]).squaredNorm(), j};
    dist[i].first = std::numeric_limits<double>::infinity();
    // ties broken by vertex index for determinism
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (int t = 0; t < k; ++t) {
      int j = dist[t].second;
      selected.insert({std::min(i, j), std::max(i, j)});
    }
  }
  Graph g;
  g.n_vertices = n;
  for (const auto& [i, j] : selected) g.edges.push_back({i, j, 1.0});
  return g;
}

LaplacianOperator laplacian(const Graph& g, bool exact_lambda_max) {
  g.validate();
  const int n = g.n_vertices;
  Matrix W = g.adjacency();
  Vector d = g.degrees();
  Vector dinv_sqrt(n);
  for (int i = 0; i < n; ++i) dinv_sqrt(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 0.0;

  LaplacianOperator L;
  L.size = n;
  L.delta = Matrix::Identity(n, n) -
            dinv_sqrt.asDiagonal() * W * dinv_sqrt.asDiagonal();
  // symmetrize away rounding asymmetry
  L.delta = 0.5 * (L.delta + L.delta.transpose()).eval();

  if (exact_lambda_max) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(L.delta, Eigen::EigenvaluesOnly);
    L.lambda_max = es.eigenvalues()(n - 1);
  } else {
    L.lambda_max = 2.0;  // upper bound for the normalized Laplacian
  }
  L.rescaled = (2.0 / L.lambda_max) * L.delta - Matrix::Identity(n, n);
  return L;
}

EigenDecomposition eigendecompose(const LaplacianOperator& L, int dense_limit) {
  if (L.size > dense_limit)
    throw CapacityError(
        "dense eigendecomposition limited to " + std::to_string(dense_limit) +
        " vertices; use the Chebyshev recurrence path instead");
  Eigen::SelfAdjointEigenSolver<Matrix> es(L.delta);
  if (es.info() != Eigen::Success)
    throw NumericError("symmetric eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

Graph read_edge_list(const std::filesystem::path& path) {
  auto lines = detail::read_lines(path);
  Graph g;
  bool have_header = false;
  int lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    if (line.rfind("#vertices=", 0) == 0) {
      g.n_vertices = std::stoi(line.substr(10));
      have_header = true;
      continue;
    }
    int i, j;
    double w;
    if (std::sscanf(line.c_str(), "%d\t%d\t%lf", &i, &j, &w) != 3)
      throw ParseError(path.string() + ":" + std::to_string(lineno) +
                       ": expected 'i<TAB>j<TAB>w'");
    g.edges.push_back({std::min(i, j), std::max(i, j), w});
  }
  if (!have_header)
    throw ParseError(path.string() + ": missing '#vertices=<n>' header");
  g.validate();
  return g;
}

void write_edge_list(const Graph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "#vertices=" << g.n_vertices << "\n";
  for (const auto& e : g.edges)
    out << e.i << "\t" << e.j << "\t" << detail::format_double(e.w) << "\n";
}

}  // namespace mgmc
