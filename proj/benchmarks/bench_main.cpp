#include <benchmark/benchmark.h>

#include <random>

#include "mgmc/baselines.hpp"
#include "mgmc/data.hpp"
#include "mgmc/nn.hpp"
#include "mgmc/spectral.hpp"
#include "mgmc/train.hpp"

using namespace mgmc;

namespace {

Matrix random_matrix(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = gauss(rng);
  return m;
}

Graph ring_graph(int n) {
  Graph g;
  g.n_vertices = n;
  for (int i = 0; i < n; ++i) g.edges.push_back({std::min(i, (i + 1) % n),
                                                 std::max(i, (i + 1) % n),
                                                 1.0});
  return g;
}

}  // namespace

static void BM_ChebApply1d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto L = laplacian(ring_graph(n), false);
  std::mt19937_64 rng(1);
  Vector theta = random_matrix(6, 1, rng).col(0);
  Matrix x = random_matrix(n, 16, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(spectral::cheb_apply_1d(L.rescaled, theta, x));
}
BENCHMARK(BM_ChebApply1d)->Arg(128)->Arg(512)->Arg(2048);

static void BM_ChebApply2d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  auto Lr = laplacian(ring_graph(n), false);
  auto Lc = laplacian(ring_graph(n + n / 3), false);
  std::mt19937_64 rng(2);
  Matrix theta = random_matrix(5, 5, rng);
  Matrix x = random_matrix(Lr.size, Lc.size, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        spectral::cheb_apply_2d(Lr.rescaled, Lc.rescaled, theta, x));
}
BENCHMARK(BM_ChebApply2d)->Arg(64)->Arg(150)->Arg(300);

static void BM_LstmStep(benchmark::State& state) {
  const int units = static_cast<int>(state.range(0));
  const int q = 8, hidden = 16;
  std::mt19937_64 rng(3);
  nn::ParamStore ps;
  auto ids = nn::make_lstm_params(ps, "lstm.", q, hidden, rng);
  Matrix input = random_matrix(units, q, rng);
  for (auto _ : state) {
    ad::Tape tape;
    auto vars = ps.bind(tape);
    nn::LstmState st{tape.constant(Matrix::Zero(units, hidden)),
                     tape.constant(Matrix::Zero(units, hidden))};
    auto next = nn::lstm_step(tape, vars, ids, tape.constant(input), st);
    benchmark::DoNotOptimize(tape.value(next.h));
  }
}
BENCHMARK(BM_LstmStep)->Arg(1000)->Arg(30000);

static void BM_RgcnnTrainIteration(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  data::SyntheticConfig cfg;
  cfg.m = side;
  cfg.n = side + side / 3;
  cfg.item_communities = 5;
  cfg.user_communities = 5;
  cfg.rank = 5;
  auto ds = data::gen_synthetic(cfg, 1);
  train::TrainConfig tc;
  tc.max_iters = 1;
  tc.p = 3;
  tc.q = 8;
  tc.hidden = 8;
  tc.T = 5;
  for (auto _ : state)
    benchmark::DoNotOptimize(train::train(train::ModelKind::full, ds, tc));
}
BENCHMARK(BM_RgcnnTrainIteration)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

static void BM_SrgcnnTrainIteration(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  data::SyntheticConfig cfg;
  cfg.m = side;
  cfg.n = side + side / 3;
  cfg.item_communities = 5;
  cfg.user_communities = 5;
  cfg.rank = 5;
  auto ds = data::gen_synthetic(cfg, 1);
  train::TrainConfig tc;
  tc.max_iters = 1;
  tc.p = 3;
  tc.q = 8;
  tc.hidden = 8;
  tc.T = 5;
  tc.rank = 5;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        train::train(train::ModelKind::factorized, ds, tc));
}
BENCHMARK(BM_SrgcnnTrainIteration)->Arg(60)->Arg(150)->Unit(benchmark::kMillisecond);

static void BM_GmcComplete(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  data::SyntheticConfig cfg;
  cfg.m = side;
  cfg.n = side + side / 3;
  cfg.item_communities = 5;
  cfg.user_communities = 5;
  cfg.rank = 5;
  auto ds = data::gen_synthetic(cfg, 1);
  auto lr = laplacian(ds.row_graph);
  auto lc = laplacian(ds.col_graph);
  for (auto _ : state)
    benchmark::DoNotOptimize(baselines::gmc_complete(
        ds.values, ds.train_mask, lr, lc, 10.0, 0.0, 100));
}
BENCHMARK(BM_GmcComplete)->Arg(60)->Arg(150)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
