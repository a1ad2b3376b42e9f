#pragma once

#include <filesystem>
#include <variant>

#include "mgmc/data.hpp"
#include "mgmc/nn.hpp"

namespace mgmc::train {

using ad::Tape;
using ad::Var;

struct TrainConfig {
  double learning_rate = 1e-3;
  double mu = 1.0;       // data-term weight
  int T = 10;            // diffusion steps
  int p = 5;             // Chebyshev order
  int q = 32;            // feature channels
  int hidden = 32;       // LSTM size
  int rank = 15;         // factor rank (separable model)
  int max_iters = 5000;
  int eval_cadence = 10;
  int patience = 200;    // evals without test-RMSE improvement before stop
  uint64_t seed = 0;

  void validate() const;
};

struct HistoryRecord {
  int iteration = 0;
  double loss = 0.0;
  double train_rmse = 0.0;
  double test_rmse = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<HistoryRecord> records;
  /// CSV "iter,loss,train_rmse,test_rmse,seconds".
  void write_csv(const std::filesystem::path& path) const;
};

/// Full-model loss: Dirichlet smoothness of X along both graphs plus the
/// masked data-fit term, tr(X^T Dr X) + tr(X Dc X^T) + mu/2 ||O.(X-Y)||_F^2.
Var loss_full(Tape& tape, Var x, const Matrix& y, const Matrix& train_mask,
              const Matrix& delta_rows, const Matrix& delta_cols, double mu);

/// Factorized loss: tr(W^T Dr W) + tr(H^T Dc H) + mu/2 ||O.(WH^T - Y)||_F^2.
Var loss_factorized(Tape& tape, Var w, Var h, const Matrix& y,
                    const Matrix& train_mask, const Matrix& delta_rows,
                    const Matrix& delta_cols, double mu);

/// One Adam update with bias correction. t counts from 1.
void adam_step(Matrix& param, const Matrix& grad, Matrix& m1, Matrix& m2,
               int t, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

/// RMSE over the entries selected by a 0/1 mask. Throws on an empty mask.
double rmse(const Matrix& prediction, const Matrix& y, const Matrix& mask);

enum class ModelKind { full, factorized };

struct TrainResult {
  std::variant<nn::RgcnnModel, nn::SrgcnnModel> model;
  TrainHistory history;
  Matrix prediction;  // final X_T (full) or W_T H_T^T (factorized)

  nn::ParamStore& params();
  const nn::ModelConfig& model_config() const;
};

/// Full-batch Adam training with backprop unrolled through all T diffusion
/// steps. Deterministic under a fixed seed. Throws NumericError on
/// divergence (non-finite or loss above 1e12).
TrainResult train(ModelKind kind, const data::RatingDataset& ds,
                  const TrainConfig& cfg);

/// X^(0): observed training values, zero elsewhere.
Matrix initial_matrix(const data::RatingDataset& ds);
/// (W^(0), H^(0)) from the rank-r truncated SVD of the filled matrix.
std::pair<Matrix, Matrix> initial_factors(const data::RatingDataset& ds, int rank);

}  // namespace mgmc::train
