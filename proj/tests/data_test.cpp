#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "mgmc/data.hpp"
#include "zlib.h"

using namespace mgmc;
using namespace mgmc::data;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mgmc_data_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

double dirichlet_energy(const Matrix& x, const Graph& g) {
  double e = 0.0;
  for (const auto& edge : g.edges)
    e += edge.w * (x.row(edge.i) - x.row(edge.j)).squaredNorm();
  return e;
}

}  // namespace

TEST_CASE("gen_synthetic: exact rank, mask counts, disjointness") {
  SyntheticConfig cfg;
  cfg.m = 30;
  cfg.n = 40;
  cfg.item_communities = 5;
  cfg.user_communities = 5;
  cfg.rank = 4;
  cfg.noise = 0.0;
  cfg.train_fraction = 0.2;
  cfg.test_fraction = 0.1;
  auto ds = gen_synthetic(cfg, 42);

  REQUIRE(ds.truth.has_value());
  Eigen::BDCSVD<Matrix> svd(*ds.truth);
  CHECK(svd.singularValues()(3) > 1e-8);   // genuinely rank 4
  CHECK(svd.singularValues()(4) < 1e-10);  // and no more

  const int64_t total = 30 * 40;
  CHECK(ds.train_count() == static_cast<int64_t>(0.2 * total));
  CHECK(ds.test_count() == static_cast<int64_t>(0.1 * total));
  CHECK(ds.train_mask.cwiseProduct(ds.test_mask).sum() == 0.0);

  // observed values agree with the truth on the union of masks
  Matrix obs = ds.train_mask + ds.test_mask;
  CHECK((obs.cwiseProduct(ds.values - *ds.truth)).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("gen_synthetic: bit-deterministic per seed, seeds differ") {
  SyntheticConfig cfg;
  cfg.m = 20;
  cfg.n = 25;
  cfg.item_communities = 4;
  cfg.user_communities = 4;
  cfg.rank = 3;
  auto a = gen_synthetic(cfg, 7);
  auto b = gen_synthetic(cfg, 7);
  auto c = gen_synthetic(cfg, 8);
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((*a.truth - *b.truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.row_graph.edges.size() == b.row_graph.edges.size());
  CHECK((*a.truth - *c.truth).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("gen_synthetic: truth is smoother on the generated graphs than "
          "under a permutation control") {
  SyntheticConfig cfg;
  cfg.m = 60;
  cfg.n = 80;
  cfg.item_communities = 6;
  cfg.user_communities = 6;
  cfg.rank = 5;
  cfg.noise = 0.0;
  std::mt19937_64 rng(1);
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    auto ds = gen_synthetic(cfg, seed);
    double real_energy = dirichlet_energy(*ds.truth, ds.row_graph);
    // permuting the rows destroys the community alignment, so the same
    // graph should see much larger variation across its edges
    std::vector<int> perm(cfg.m);
    for (int i = 0; i < cfg.m; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix shuffled(cfg.m, cfg.n);
    for (int i = 0; i < cfg.m; ++i) shuffled.row(i) = ds.truth->row(perm[i]);
    double control_energy = dirichlet_energy(shuffled, ds.row_graph);
    CHECK(real_energy < 0.5 * control_energy);
  }
}

TEST_CASE("gen_synthetic: invalid configurations rejected") {
  SyntheticConfig cfg;
  cfg.m = 5;
  cfg.item_communities = 10;
  CHECK_THROWS_AS(gen_synthetic(cfg, 0), InvalidInputError);
  SyntheticConfig cfg2;
  cfg2.train_fraction = 0.7;
  cfg2.test_fraction = 0.7;
  CHECK_THROWS_AS(gen_synthetic(cfg2, 0), InvalidInputError);
}

TEST_CASE("split_entries: counts, disjointness, determinism, errors") {
  std::mt19937_64 rng(2);
  Matrix obs = Matrix::Ones(6, 8);
  auto [train, test] = split_entries(obs, 0.25, 5);
  CHECK(train.sum() == 12.0);
  CHECK(test.sum() == 36.0);
  CHECK(train.cwiseProduct(test).sum() == 0.0);
  CHECK((train + test - obs).cwiseAbs().maxCoeff() == 0.0);

  auto [train2, test2] = split_entries(obs, 0.25, 5);
  CHECK((train - train2).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(split_entries(obs, 0.0, 1), InvalidInputError);
  CHECK_THROWS_AS(split_entries(obs, 1.0, 1), InvalidInputError);
  CHECK_THROWS_AS(split_entries(Matrix::Zero(3, 3), 0.5, 1),
                  InvalidInputError);
}

TEST_CASE("split_entries: assignment is uniform across seeds") {
  Matrix obs = Matrix::Ones(5, 4);  // 20 entries, half to train
  const int trials = 400;
  Matrix train_counts = Matrix::Zero(5, 4);
  for (int s = 0; s < trials; ++s) {
    auto [train, test] = split_entries(obs, 0.5, 1000 + s);
    train_counts += train;
  }
  // each entry is a Binomial(400, 0.5) count: mean 200, sd = 10; a +-6 sd
  // band makes a false alarm vanishingly unlikely
  CHECK(train_counts.minCoeff() > 140.0);
  CHECK(train_counts.maxCoeff() < 260.0);
}

TEST_CASE("dataset directory round trip is exact") {
  SyntheticConfig cfg;
  cfg.m = 15;
  cfg.n = 12;
  cfg.item_communities = 3;
  cfg.user_communities = 3;
  cfg.rank = 3;
  auto ds = gen_synthetic(cfg, 21);
  TempDir tmp;
  save_dataset(ds, tmp.path);
  auto back = load_dataset(tmp.path);

  CHECK(back.m == ds.m);
  CHECK(back.n == ds.n);
  CHECK((back.values - ds.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.train_mask - ds.train_mask).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.test_mask - ds.test_mask).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.truth.has_value());
  CHECK((*back.truth - *ds.truth).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.row_graph.edges.size() == ds.row_graph.edges.size());
  CHECK(back.col_graph.edges.size() == ds.col_graph.edges.size());
}

TEST_CASE("load_dataset: transparent gzip for the observations table") {
  SyntheticConfig cfg;
  cfg.m = 10;
  cfg.n = 10;
  cfg.item_communities = 2;
  cfg.user_communities = 2;
  cfg.rank = 2;
  auto ds = gen_synthetic(cfg, 33);
  TempDir tmp;
  save_dataset(ds, tmp.path);

  {  // recompress observed.tsv and drop the plain copy
    std::ifstream in(tmp.path / "observed.tsv", std::ios::binary);
    std::string body((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    gzFile gz = gzopen((tmp.path / "observed.tsv.gz").string().c_str(), "wb");
    REQUIRE(gz != nullptr);
    gzwrite(gz, body.data(), static_cast<unsigned>(body.size()));
    gzclose(gz);
  }
  fs::remove(tmp.path / "observed.tsv");

  auto back = load_dataset(tmp.path);
  CHECK((back.values - ds.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.train_mask - ds.train_mask).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("load_dataset: malformed observation line raises ParseError") {
  SyntheticConfig cfg;
  cfg.m = 8;
  cfg.n = 8;
  cfg.item_communities = 2;
  cfg.user_communities = 2;
  cfg.rank = 2;
  auto ds = gen_synthetic(cfg, 12);
  TempDir tmp;
  save_dataset(ds, tmp.path);
  {
    std::ofstream out(tmp.path / "observed.tsv", std::ios::app);
    out << "3\tnot_a_number\n";
  }
  CHECK_THROWS_AS(load_dataset(tmp.path), ParseError);
}

TEST_CASE("load_movielens: tiny fixture with the ml-100k layouts") {
  TempDir tmp;
  {
    std::ofstream u(tmp.path / "u.user");
    u << "1|24|M|technician|85711\n";
    u << "2|53|F|writer|94043\n";
    u << "3|31|M|writer|32067\n";
  }
  {
    std::ofstream i(tmp.path / "u.item");
    i << "1|Film A (1995)|01-Jan-1995||http://a|0|1|0\n";
    i << "2|Film B (1971)|01-Jan-1971||http://b|1|0|0\n";
    i << "3|Film C (1995)|01-Jan-1995||http://c|0|1|0\n";
  }
  {
    std::ofstream r(tmp.path / "u.data");
    r << "1\t1\t5\t874965758\n";
    r << "1\t2\t3\t874965759\n";
    r << "2\t1\t4\t874965760\n";
    r << "3\t3\t1\t874965761\n";
  }
  auto ds = load_movielens(tmp.path / "u.data", tmp.path / "u.user",
                           tmp.path / "u.item", 0.5, 1, 1);
  CHECK(ds.m == 3);  // items are rows
  CHECK(ds.n == 3);
  CHECK(ds.values(0, 0) == 5.0);  // item 1, user 1
  CHECK(ds.values(1, 0) == 3.0);
  CHECK(ds.values(0, 1) == 4.0);
  CHECK(ds.values(2, 2) == 1.0);
  CHECK(ds.train_count() + ds.test_count() == 4);
  CHECK(ds.row_graph.n_vertices == 3);
  CHECK(ds.col_graph.n_vertices == 3);

  {  // malformed rating line
    std::ofstream r(tmp.path / "u.data", std::ios::app);
    r << "2 3 oops\n";
  }
  CHECK_THROWS_AS(load_movielens(tmp.path / "u.data", tmp.path / "u.user",
                                 tmp.path / "u.item", 0.5, 1, 1),
                  ParseError);
}
