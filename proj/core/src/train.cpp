#include "mgmc/train.hpp"

#include <Eigen/SVD>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include "text_io.hpp"

namespace mgmc::train {

void TrainConfig::validate() const {
  if (learning_rate <= 0 || mu < 0 || T < 1 || p < 0 || q < 1 || hidden < 1 ||
      rank < 1 || max_iters < 0 || eval_cadence < 1 || patience < 1)
    throw InvalidInputError("invalid training configuration");
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "iter,loss,train_rmse,test_rmse,seconds\n";
  for (const auto& r : records)
    out << r.iteration << "," << detail::format_double(r.loss) << ","
        << detail::format_double(r.train_rmse) << ","
        << detail::format_double(r.test_rmse) << ","
        << detail::format_double(r.seconds) << "\n";
}

Var loss_full(Tape& tape, Var x, const Matrix& y, const Matrix& train_mask,
              const Matrix& delta_rows, const Matrix& delta_cols, double mu) {
  Var row_term = tape.bilinear_trace(x, delta_rows);
  Var col_term = tape.bilinear_trace(tape.transpose(x), delta_cols);
  Var resid = tape.subtract(x, tape.constant(y));
  Var data = tape.scale(tape.masked_frobenius_sq(resid, train_mask), mu / 2.0);
  return tape.add(tape.add(row_term, col_term), data);
}

Var loss_factorized(Tape& tape, Var w, Var h, const Matrix& y,
                    const Matrix& train_mask, const Matrix& delta_rows,
                    const Matrix& delta_cols, double mu) {
  Var row_term = tape.bilinear_trace(w, delta_rows);
  Var col_term = tape.bilinear_trace(h, delta_cols);
  Var resid = tape.subtract(tape.matmul(w, tape.transpose(h)), tape.constant(y));
  Var data = tape.scale(tape.masked_frobenius_sq(resid, train_mask), mu / 2.0);
  return tape.add(tape.add(row_term, col_term), data);
}

void adam_step(Matrix& param, const Matrix& grad, Matrix& m1, Matrix& m2,
               int t, double lr, double beta1, double beta2, double eps) {
  if (t < 1) throw InvalidInputError("adam step index must be >= 1");
  m1 = beta1 * m1 + (1.0 - beta1) * grad;
  m2 = beta2 * m2.array().matrix() +
       (1.0 - beta2) * grad.array().square().matrix();
  double c1 = 1.0 - std::pow(beta1, t);
  double c2 = 1.0 - std::pow(beta2, t);
  param.array() -=
      lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
}

double rmse(const Matrix& prediction, const Matrix& y, const Matrix& mask) {
  double count = mask.sum();
  if (count <= 0.0) throw InvalidInputError("rmse: empty evaluation mask");
  return std::sqrt(mask.cwiseProduct(prediction - y).squaredNorm() / count);
}

Matrix initial_matrix(const data::RatingDataset& ds) {
  return ds.train_mask.cwiseProduct(ds.values);
}

std::pair<Matrix, Matrix> initial_factors(const data::RatingDataset& ds,
                                          int rank) {
  Matrix x0 = initial_matrix(ds);
  Eigen::BDCSVD<Matrix> svd(x0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  int r = std::min<int>(rank, static_cast<int>(svd.singularValues().size()));
  Matrix w = Matrix::Zero(ds.m, rank);
  Matrix h = Matrix::Zero(ds.n, rank);
  for (int k = 0; k < r; ++k) {
    double s = std::sqrt(svd.singularValues()(k));
    w.col(k) = svd.matrixU().col(k) * s;
    h.col(k) = svd.matrixV().col(k) * s;
  }
  return {w, h};
}

nn::ParamStore& TrainResult::params() {
  if (auto* m = std::get_if<nn::RgcnnModel>(&model)) return m->params();
  return std::get<nn::SrgcnnModel>(model).params();
}

const nn::ModelConfig& TrainResult::model_config() const {
  if (auto* m = std::get_if<nn::RgcnnModel>(&model)) return m->config();
  return std::get<nn::SrgcnnModel>(model).config();
}

TrainResult train(ModelKind kind, const data::RatingDataset& ds,
                  const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();

  LaplacianOperator lap_r = laplacian(ds.row_graph);
  LaplacianOperator lap_c = laplacian(ds.col_graph);

  nn::ModelConfig mc;
  mc.p = cfg.p;
  mc.q = cfg.q;
  mc.hidden = cfg.hidden;
  mc.rank = cfg.rank;
  mc.T = cfg.T;
  mc.seed = cfg.seed;

  TrainResult result{kind == ModelKind::full
                         ? std::variant<nn::RgcnnModel, nn::SrgcnnModel>(
                               nn::RgcnnModel(mc))
                         : std::variant<nn::RgcnnModel, nn::SrgcnnModel>(
                               nn::SrgcnnModel(mc)),
                     {}, {}};

  Matrix x0 = initial_matrix(ds);
  Matrix w0, h0;
  if (kind == ModelKind::factorized)
    std::tie(w0, h0) = initial_factors(ds, cfg.rank);

  auto t_start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t_start)
        .count();
  };

  // One full forward (+ optional backward) pass; returns (loss, prediction).
  auto run_step = [&](bool do_backward, std::vector<Matrix>* grads) {
    Tape tape;
    nn::ParamStore& ps = result.params();
    std::vector<Var> vars = ps.bind(tape);
    Var loss_var;
    Matrix prediction;
    if (kind == ModelKind::full) {
      auto& model = std::get<nn::RgcnnModel>(result.model);
      auto diff = model.diffuse(tape, vars, x0, lap_r.rescaled, lap_c.rescaled,
                                cfg.T);
      loss_var = loss_full(tape, diff.x_final, ds.values, ds.train_mask,
                           lap_r.delta, lap_c.delta, cfg.mu);
      prediction = tape.value(diff.x_final);
    } else {
      auto& model = std::get<nn::SrgcnnModel>(result.model);
      auto diff = model.diffuse(tape, vars, w0, h0, lap_r.rescaled,
                                lap_c.rescaled, cfg.T);
      loss_var = loss_factorized(tape, diff.w_final, diff.h_final, ds.values,
                                 ds.train_mask, lap_r.delta, lap_c.delta,
                                 cfg.mu);
      prediction =
          tape.value(diff.w_final) * tape.value(diff.h_final).transpose();
    }
    double loss = tape.value(loss_var)(0, 0);
    if (!std::isfinite(loss) || loss > 1e12)
      throw NumericError("training diverged: loss = " + std::to_string(loss));
    if (do_backward) {
      tape.backward(loss_var);
      grads->clear();
      for (Var v : vars) grads->push_back(tape.grad(v));
    }
    return std::make_pair(loss, std::move(prediction));
  };

  auto record = [&](int iter, double loss, const Matrix& prediction) {
    HistoryRecord r;
    r.iteration = iter;
    r.loss = loss;
    r.train_rmse = rmse(prediction, ds.values, ds.train_mask);
    r.test_rmse = rmse(prediction, ds.values, ds.test_mask);
    r.seconds = elapsed();
    result.history.records.push_back(r);
    return r.test_rmse;
  };

  {
    auto [loss, prediction] = run_step(false, nullptr);
    record(0, loss, prediction);
    result.prediction = prediction;
  }

  double best_rmse = result.history.records.back().test_rmse;
  int evals_since_best = 0;
  std::vector<Matrix> grads;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    auto [loss, prediction] = run_step(true, &grads);
    nn::ParamStore& ps = result.params();
    for (size_t k = 0; k < ps.entries.size(); ++k)
      adam_step(ps.entries[k].value, grads[k], ps.entries[k].m1,
                ps.entries[k].m2, iter, cfg.learning_rate);
    result.prediction = prediction;
    if (iter % cfg.eval_cadence == 0 || iter == cfg.max_iters) {
      double test = record(iter, loss, prediction);
      if (test < best_rmse - 1e-12) {
        best_rmse = test;
        evals_since_best = 0;
      } else if (++evals_since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (cfg.max_iters > 0) {
    // prediction reflecting the final parameter values
    auto [loss, prediction] = run_step(false, nullptr);
    (void)loss;
    result.prediction = prediction;
  }
  return result;
}

}  // namespace mgmc::train
