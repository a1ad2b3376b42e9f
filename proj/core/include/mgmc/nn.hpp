#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mgmc/autodiff.hpp"
#include "mgmc/graph.hpp"

namespace mgmc::nn {

using ad::Tape;
using ad::Var;

/// Named trainable matrices plus their Adam moment buffers.
struct ParamStore {
  struct Entry {
    std::string name;
    Matrix value;
    Matrix m1;  // Adam first moment
    Matrix m2;  // Adam second moment
  };
  std::vector<Entry> entries;

  int add(std::string name, Matrix init);
  /// Creates one gradient-requiring leaf per entry, in order.
  std::vector<Var> bind(Tape& tape) const;
  void zero_all();
  int64_t count() const;  // total scalar parameter count
};

/// Glorot-uniform matrix, deterministic under the given engine.
Matrix glorot_uniform(int rows, int cols, std::mt19937_64& rng);

struct LstmParamIds {
  int wx[4];  // input, forget, output, candidate: q x hidden
  int wh[4];  // hidden x hidden
  int b[4];   // 1 x hidden
};

LstmParamIds make_lstm_params(ParamStore& ps, const std::string& prefix,
                              int input_dim, int hidden, std::mt19937_64& rng);

struct LstmState {
  Var h;  // units x hidden
  Var c;
};

/// One step of a standard LSTM cell applied independently to every row of
/// input (units x input_dim), with parameters shared across all units.
LstmState lstm_step(Tape& tape, const std::vector<Var>& params,
                    const LstmParamIds& ids, Var input,
                    const LstmState& state);

/// Multi-graph convolution layer: Chebyshev filtering along the row and
/// column graphs jointly. Coefficients are stored flat as
/// q_out x (q_in * (p+1)^2); parameter count q_out*q_in*(p+1)^2 + q_out.
struct MgcnnLayer {
  int p = 5;
  int q_in = 1;
  int q_out = 32;
  int theta = -1;  // ParamStore index
  int bias = -1;
  bool relu = true;
};

MgcnnLayer make_mgcnn_layer(ParamStore& ps, const std::string& prefix, int p,
                            int q_in, int q_out, std::mt19937_64& rng,
                            bool relu = true);

/// Input: channels of an m x n matrix flattened column-major into an
/// (m*n) x q_in matrix. Output: (m*n) x q_out features.
Var mgcnn_forward(Tape& tape, const std::vector<Var>& params,
                  const MgcnnLayer& layer, const Matrix& rescaled_rows,
                  const Matrix& rescaled_cols, Var x_flat, int m, int n);

/// Single-graph convolution layer; coefficients q_out x (q_in*(p+1)).
struct GcnnLayer {
  int p = 5;
  int q_in = 1;
  int q_out = 32;
  int theta = -1;
  int bias = -1;
  bool relu = true;
};

GcnnLayer make_gcnn_layer(ParamStore& ps, const std::string& prefix, int p,
                          int q_in, int q_out, std::mt19937_64& rng,
                          bool relu = true);

/// Input: n x q_in vertex features; output: n x q_out.
Var gcnn_forward(Tape& tape, const std::vector<Var>& params,
                 const GcnnLayer& layer, const Matrix& rescaled, Var f);

struct ModelConfig {
  int p = 5;        // Chebyshev order
  int q = 32;       // convolution output channels
  int hidden = 32;  // LSTM features
  int rank = 15;    // factor rank (separable model only)
  int T = 10;       // diffusion steps
  uint64_t seed = 0;
};

/// Full-matrix diffusion model: MGCNN features -> per-element shared LSTM ->
/// linear projection to a scalar increment -> additive update, repeated T
/// times with persistent LSTM state.
class RgcnnModel {
 public:
  explicit RgcnnModel(const ModelConfig& cfg);

  struct DiffuseResult {
    Var x_final;
    std::vector<Matrix> trajectory;  // X_0..X_T values
  };

  DiffuseResult diffuse(Tape& tape, const std::vector<Var>& params,
                        const Matrix& x0, const Matrix& rescaled_rows,
                        const Matrix& rescaled_cols, int steps) const;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  ModelConfig cfg_;
  ParamStore params_;
  MgcnnLayer conv_;
  LstmParamIds lstm_;
  int proj_w_ = -1;
  int proj_b_ = -1;
};

/// Separable diffusion model operating on low-rank factors W (m x r) and
/// H (n x r) with independent row/column GCNN+LSTM parameter sets.
class SrgcnnModel {
 public:
  explicit SrgcnnModel(const ModelConfig& cfg);

  struct DiffuseResult {
    Var w_final;  // m x r
    Var h_final;  // n x r
    std::vector<Matrix> trajectory;  // W_t H_t^T values, t = 0..T
  };

  DiffuseResult diffuse(Tape& tape, const std::vector<Var>& params,
                        const Matrix& w0, const Matrix& h0,
                        const Matrix& rescaled_rows,
                        const Matrix& rescaled_cols, int steps) const;

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  struct Side {
    GcnnLayer conv;
    LstmParamIds lstm;
    int proj_w = -1;
    int proj_b = -1;
  };
  Var side_step(Tape& tape, const std::vector<Var>& params, const Side& side,
                const Matrix& rescaled, Var factor, LstmState& state) const;

  ModelConfig cfg_;
  ParamStore params_;
  Side row_;  // processes W over the row graph
  Side col_;  // processes H over the column graph
};

/// Checkpoint: JSON document with model kind, config, seed, and all
/// parameter tensors. Deterministic serialization.
void save_checkpoint(const std::filesystem::path& path,
                     const std::string& kind, const ModelConfig& cfg,
                     const ParamStore& params);
struct Checkpoint {
  std::string kind;
  ModelConfig cfg;
  std::vector<std::pair<std::string, Matrix>> params;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);
void restore_params(ParamStore& ps, const Checkpoint& ck);

}  // namespace mgmc::nn
