#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "mgmc/graph.hpp"

namespace mgmc::data {

/// Partially observed m x n score matrix plus row/column graphs. Masks are
/// 0/1 matrices; train and test are disjoint subsets of the observed set.
struct RatingDataset {
  int m = 0;  // items (rows)
  int n = 0;  // users (columns)
  Matrix values;      // observed values (0 where unobserved)
  Matrix train_mask;  // 0/1
  Matrix test_mask;   // 0/1
  Graph row_graph;
  Graph col_graph;
  std::optional<Matrix> truth;  // full ground truth (synthetic only)

  void validate() const;
  int64_t train_count() const { return static_cast<int64_t>(train_mask.sum()); }
  int64_t test_count() const { return static_cast<int64_t>(test_mask.sum()); }
};

struct SyntheticConfig {
  int m = 150;
  int n = 200;
  int item_communities = 15;
  int user_communities = 15;
  int rank = 15;
  double noise = 0.01;          // entrywise Gaussian noise on the scores
  double factor_jitter = 0.1;   // per-vertex deviation from community factors
  double intra_edge_prob = 0.7;
  double inter_edge_prob = 0.02;
  double train_fraction = 0.15;
  double test_fraction = 0.15;
};

/// Community-structured low-rank dataset: vertices are assigned to
/// communities, factor rows are community-constant plus jitter, scores are
/// W H^T plus noise, and graphs connect mostly within communities.
/// Bit-deterministic per seed.
RatingDataset gen_synthetic(const SyntheticConfig& cfg, uint64_t seed);

/// Disjoint uniform split of the observed entries: `fraction` goes to train,
/// the rest to test. Deterministic per seed.
std::pair<Matrix, Matrix> split_entries(const Matrix& observed_mask,
                                        double fraction, uint64_t seed);

/// MovieLens-100k style loader. Ratings: "user<TAB>item<TAB>rating<TAB>ts",
/// 1-based ids. User/item feature files use the pipe-separated ml-100k
/// layout. Graphs are unweighted 10-NN graphs in feature space.
RatingDataset load_movielens(const std::filesystem::path& ratings,
                             const std::filesystem::path& user_features,
                             const std::filesystem::path& item_features,
                             double train_fraction = 0.8, uint64_t seed = 0,
                             int knn = 10);

/// Directory format: meta.json, observed.tsv (i j value split), row_graph.tsv,
/// col_graph.tsv, optional truth.tsv. Round-trips exactly.
void save_dataset(const RatingDataset& ds, const std::filesystem::path& dir);
RatingDataset load_dataset(const std::filesystem::path& dir);

}  // namespace mgmc::data
