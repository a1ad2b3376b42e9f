#include "mgmc/nn.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace mgmc::nn {

int ParamStore::add(std::string name, Matrix init) {
  Entry e;
  e.name = std::move(name);
  e.m1 = Matrix::Zero(init.rows(), init.cols());
  e.m2 = Matrix::Zero(init.rows(), init.cols());
  e.value = std::move(init);
  entries.push_back(std::move(e));
  return static_cast<int>(entries.size()) - 1;
}

std::vector<Var> ParamStore::bind(Tape& tape) const {
  std::vector<Var> vars;
  vars.reserve(entries.size());
  for (const auto& e : entries) vars.push_back(tape.leaf(e.value, true));
  return vars;
}

void ParamStore::zero_all() {
  for (auto& e : entries) e.value.setZero();
}

int64_t ParamStore::count() const {
  int64_t n = 0;
  for (const auto& e : entries) n += e.value.size();
  return n;
}

Matrix glorot_uniform(int rows, int cols, std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / (rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

LstmParamIds make_lstm_params(ParamStore& ps, const std::string& prefix,
                              int input_dim, int hidden,
                              std::mt19937_64& rng) {
  static const char* gate[4] = {"i", "f", "o", "g"};
  LstmParamIds ids;
  for (int k = 0; k < 4; ++k)
    ids.wx[k] = ps.add(prefix + ".wx_" + gate[k],
                       glorot_uniform(input_dim, hidden, rng));
  for (int k = 0; k < 4; ++k)
    ids.wh[k] =
        ps.add(prefix + ".wh_" + gate[k], glorot_uniform(hidden, hidden, rng));
  for (int k = 0; k < 4; ++k) {
    Matrix b = Matrix::Zero(1, hidden);
    if (k == 1) b.setOnes();  // forget gate open at start
    ids.b[k] = ps.add(prefix + ".b_" + gate[k], std::move(b));
  }
  return ids;
}

LstmState lstm_step(Tape& tape, const std::vector<Var>& params,
                    const LstmParamIds& ids, Var input,
                    const LstmState& state) {
  auto gate_pre = [&](int k) {
    Var z = tape.add(tape.matmul(input, params[ids.wx[k]]),
                     tape.matmul(state.h, params[ids.wh[k]]));
    return tape.add_rowvec(z, params[ids.b[k]]);
  };
  Var i = tape.sigmoid(gate_pre(0));
  Var f = tape.sigmoid(gate_pre(1));
  Var o = tape.sigmoid(gate_pre(2));
  Var g = tape.tanh(gate_pre(3));
  Var c_new = tape.add(tape.hadamard(f, state.c), tape.hadamard(i, g));
  Var h_new = tape.hadamard(o, tape.tanh(c_new));
  return {h_new, c_new};
}

MgcnnLayer make_mgcnn_layer(ParamStore& ps, const std::string& prefix, int p,
                            int q_in, int q_out, std::mt19937_64& rng,
                            bool relu) {
  MgcnnLayer layer;
  layer.p = p;
  layer.q_in = q_in;
  layer.q_out = q_out;
  layer.relu = relu;
  int basis = q_in * (p + 1) * (p + 1);
  layer.theta = ps.add(prefix + ".theta", glorot_uniform(q_out, basis, rng));
  layer.bias = ps.add(prefix + ".bias", Matrix::Zero(1, q_out));
  return layer;
}

namespace {

// Chebyshev stack over one m x n channel: columns vec(T_j(Lr) X T_j'(Lc))
// for j, j' = 0..p, appended to `cols` in row-major (j, j') order.
void cheb_basis_2d(Tape& tape, Var x, int m, int n, Var lr, Var lc, int p,
                   std::vector<Var>& cols) {
  std::vector<Var> row_stack(p + 1);
  row_stack[0] = x;
  if (p >= 1) row_stack[1] = tape.matmul(lr, x);
  for (int j = 2; j <= p; ++j)
    row_stack[j] = tape.subtract(
        tape.scale(tape.matmul(lr, row_stack[j - 1]), 2.0), row_stack[j - 2]);
  for (int j = 0; j <= p; ++j) {
    Var t_prev = row_stack[j];
    cols.push_back(tape.reshape(t_prev, m * n, 1));
    if (p == 0) continue;
    Var t_cur = tape.matmul(t_prev, lc);
    cols.push_back(tape.reshape(t_cur, m * n, 1));
    for (int k = 2; k <= p; ++k) {
      Var t_next =
          tape.subtract(tape.scale(tape.matmul(t_cur, lc), 2.0), t_prev);
      cols.push_back(tape.reshape(t_next, m * n, 1));
      t_prev = t_cur;
      t_cur = t_next;
    }
  }
}

// One-dimensional stack: columns T_j(L) f for j = 0..p.
void cheb_basis_1d(Tape& tape, Var f, Var l, int p, std::vector<Var>& cols) {
  Var t_prev = f;
  cols.push_back(t_prev);
  if (p == 0) return;
  Var t_cur = tape.matmul(l, f);
  cols.push_back(t_cur);
  for (int j = 2; j <= p; ++j) {
    Var t_next = tape.subtract(tape.scale(tape.matmul(l, t_cur), 2.0), t_prev);
    cols.push_back(t_next);
    t_prev = t_cur;
    t_cur = t_next;
  }
}

}  // namespace

Var mgcnn_forward(Tape& tape, const std::vector<Var>& params,
                  const MgcnnLayer& layer, const Matrix& rescaled_rows,
                  const Matrix& rescaled_cols, Var x_flat, int m, int n) {
  if (tape.value(x_flat).rows() != static_cast<Eigen::Index>(m) * n ||
      tape.value(x_flat).cols() != layer.q_in)
    throw InvalidInputError("mgcnn_forward: input must be (m*n) x q_in");
  Var lr = tape.constant(rescaled_rows);
  Var lc = tape.constant(rescaled_cols);
  std::vector<Var> cols;
  cols.reserve(static_cast<size_t>(layer.q_in) * (layer.p + 1) * (layer.p + 1));
  for (int ch = 0; ch < layer.q_in; ++ch) {
    Var x = tape.reshape(tape.slice_cols(x_flat, ch, 1), m, n);
    cheb_basis_2d(tape, x, m, n, lr, lc, layer.p, cols);
  }
  Var basis = tape.concat_cols(cols);  // (m*n) x (q_in*(p+1)^2)
  Var out = tape.matmul(basis, tape.transpose(params[layer.theta]));
  out = tape.add_rowvec(out, params[layer.bias]);
  return layer.relu ? tape.relu(out) : out;
}

GcnnLayer make_gcnn_layer(ParamStore& ps, const std::string& prefix, int p,
                          int q_in, int q_out, std::mt19937_64& rng,
                          bool relu) {
  GcnnLayer layer;
  layer.p = p;
  layer.q_in = q_in;
  layer.q_out = q_out;
  layer.relu = relu;
  layer.theta =
      ps.add(prefix + ".theta", glorot_uniform(q_out, q_in * (p + 1), rng));
  layer.bias = ps.add(prefix + ".bias", Matrix::Zero(1, q_out));
  return layer;
}

Var gcnn_forward(Tape& tape, const std::vector<Var>& params,
                 const GcnnLayer& layer, const Matrix& rescaled, Var f) {
  if (tape.value(f).cols() != layer.q_in)
    throw InvalidInputError("gcnn_forward: input must be n x q_in");
  Var l = tape.constant(rescaled);
  std::vector<Var> cols;
  cols.reserve(static_cast<size_t>(layer.q_in) * (layer.p + 1));
  for (int ch = 0; ch < layer.q_in; ++ch)
    cheb_basis_1d(tape, tape.slice_cols(f, ch, 1), l, layer.p, cols);
  Var basis = tape.concat_cols(cols);  // n x (q_in*(p+1))
  Var out = tape.matmul(basis, tape.transpose(params[layer.theta]));
  out = tape.add_rowvec(out, params[layer.bias]);
  return layer.relu ? tape.relu(out) : out;
}

RgcnnModel::RgcnnModel(const ModelConfig& cfg) : cfg_(cfg) {
  std::mt19937_64 rng(cfg.seed);
  conv_ = make_mgcnn_layer(params_, "conv", cfg.p, 1, cfg.q, rng);
  lstm_ = make_lstm_params(params_, "lstm", cfg.q, cfg.hidden, rng);
  proj_w_ = params_.add("proj.w", glorot_uniform(cfg.hidden, 1, rng));
  proj_b_ = params_.add("proj.b", Matrix::Zero(1, 1));
}

RgcnnModel::DiffuseResult RgcnnModel::diffuse(
    Tape& tape, const std::vector<Var>& params, const Matrix& x0,
    const Matrix& rescaled_rows, const Matrix& rescaled_cols,
    int steps) const {
  const int m = static_cast<int>(x0.rows());
  const int n = static_cast<int>(x0.cols());
  if (steps < 1) throw InvalidInputError("diffuse: steps must be >= 1");
  Var x = tape.constant(x0);
  LstmState state{tape.constant(Matrix::Zero(m * n, cfg_.hidden)),
                  tape.constant(Matrix::Zero(m * n, cfg_.hidden))};
  DiffuseResult res;
  res.trajectory.push_back(x0);
  for (int t = 0; t < steps; ++t) {
    try {
      Var x_flat = tape.reshape(x, m * n, 1);
      Var feat = mgcnn_forward(tape, params, conv_, rescaled_rows,
                               rescaled_cols, x_flat, m, n);
      state = lstm_step(tape, params, lstm_, feat, state);
      Var dx_flat =
          tape.add_rowvec(tape.matmul(state.h, params[proj_w_]), params[proj_b_]);
      x = tape.add(x, tape.reshape(dx_flat, m, n));
    } catch (const NumericError& e) {
      throw NumericError("rgcnn diffusion step " + std::to_string(t) + ": " +
                         e.what());
    }
    res.trajectory.push_back(tape.value(x));
  }
  res.x_final = x;
  return res;
}

SrgcnnModel::SrgcnnModel(const ModelConfig& cfg) : cfg_(cfg) {
  std::mt19937_64 rng(cfg.seed);
  row_.conv = make_gcnn_layer(params_, "row.conv", cfg.p, cfg.rank, cfg.q, rng);
  row_.lstm = make_lstm_params(params_, "row.lstm", cfg.q, cfg.hidden, rng);
  row_.proj_w = params_.add("row.proj.w", glorot_uniform(cfg.hidden, cfg.rank, rng));
  row_.proj_b = params_.add("row.proj.b", Matrix::Zero(1, cfg.rank));
  col_.conv = make_gcnn_layer(params_, "col.conv", cfg.p, cfg.rank, cfg.q, rng);
  col_.lstm = make_lstm_params(params_, "col.lstm", cfg.q, cfg.hidden, rng);
  col_.proj_w = params_.add("col.proj.w", glorot_uniform(cfg.hidden, cfg.rank, rng));
  col_.proj_b = params_.add("col.proj.b", Matrix::Zero(1, cfg.rank));
}

Var SrgcnnModel::side_step(Tape& tape, const std::vector<Var>& params,
                           const Side& side, const Matrix& rescaled,
                           Var factor, LstmState& state) const {
  Var feat = gcnn_forward(tape, params, side.conv, rescaled, factor);
  state = lstm_step(tape, params, side.lstm, feat, state);
  Var d = tape.add_rowvec(tape.matmul(state.h, params[side.proj_w]),
                          params[side.proj_b]);
  return tape.add(factor, d);
}

SrgcnnModel::DiffuseResult SrgcnnModel::diffuse(
    Tape& tape, const std::vector<Var>& params, const Matrix& w0,
    const Matrix& h0, const Matrix& rescaled_rows, const Matrix& rescaled_cols,
    int steps) const {
  if (steps < 1) throw InvalidInputError("diffuse: steps must be >= 1");
  if (w0.cols() != cfg_.rank || h0.cols() != cfg_.rank)
    throw InvalidInputError("diffuse: factors must have cfg.rank columns");
  Var w = tape.constant(w0);
  Var h = tape.constant(h0);
  LstmState wstate{
      tape.constant(Matrix::Zero(w0.rows(), cfg_.hidden)),
      tape.constant(Matrix::Zero(w0.rows(), cfg_.hidden))};
  LstmState hstate{
      tape.constant(Matrix::Zero(h0.rows(), cfg_.hidden)),
      tape.constant(Matrix::Zero(h0.rows(), cfg_.hidden))};
  DiffuseResult res;
  res.trajectory.push_back(w0 * h0.transpose());
  for (int t = 0; t < steps; ++t) {
    try {
      h = side_step(tape, params, col_, rescaled_cols, h, hstate);
      w = side_step(tape, params, row_, rescaled_rows, w, wstate);
    } catch (const NumericError& e) {
      throw NumericError("srgcnn diffusion step " + std::to_string(t) + ": " +
                         e.what());
    }
    res.trajectory.push_back(tape.value(w) * tape.value(h).transpose());
  }
  res.w_final = w;
  res.h_final = h;
  return res;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data(m.data(), m.data() + m.size());
  j["data"] = data;  // column-major
  return j;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  int rows = j.at("rows").get<int>();
  int cols = j.at("cols").get<int>();
  auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) !=
      static_cast<Eigen::Index>(rows) * cols)
    throw ParseError("checkpoint: tensor size mismatch");
  return Eigen::Map<const Matrix>(data.data(), rows, cols);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& kind,
                     const ModelConfig& cfg, const ParamStore& params) {
  nlohmann::json j;
  j["format"] = "mgmc-checkpoint-v1";
  j["kind"] = kind;
  j["config"] = {{"p", cfg.p},       {"q", cfg.q}, {"hidden", cfg.hidden},
                 {"rank", cfg.rank}, {"T", cfg.T}, {"seed", cfg.seed}};
  nlohmann::json ps = nlohmann::json::array();
  for (const auto& e : params.entries) {
    nlohmann::json pe = matrix_to_json(e.value);
    pe["name"] = e.name;
    ps.push_back(std::move(pe));
  }
  j["params"] = std::move(ps);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "mgmc-checkpoint-v1")
    throw ParseError("not an mgmc checkpoint: " + path.string());
  Checkpoint ck;
  ck.kind = j.at("kind").get<std::string>();
  const auto& c = j.at("config");
  ck.cfg.p = c.at("p").get<int>();
  ck.cfg.q = c.at("q").get<int>();
  ck.cfg.hidden = c.at("hidden").get<int>();
  ck.cfg.rank = c.at("rank").get<int>();
  ck.cfg.T = c.at("T").get<int>();
  ck.cfg.seed = c.at("seed").get<uint64_t>();
  for (const auto& pe : j.at("params"))
    ck.params.emplace_back(pe.at("name").get<std::string>(),
                           matrix_from_json(pe));
  return ck;
}

void restore_params(ParamStore& ps, const Checkpoint& ck) {
  if (ps.entries.size() != ck.params.size())
    throw InvalidInputError("checkpoint parameter count mismatch");
  for (size_t i = 0; i < ps.entries.size(); ++i) {
    if (ps.entries[i].name != ck.params[i].first)
      throw InvalidInputError("checkpoint parameter name mismatch: " +
                              ps.entries[i].name + " vs " + ck.params[i].first);
    if (ps.entries[i].value.rows() != ck.params[i].second.rows() ||
        ps.entries[i].value.cols() != ck.params[i].second.cols())
      throw InvalidInputError("checkpoint parameter shape mismatch: " +
                              ps.entries[i].name);
    ps.entries[i].value = ck.params[i].second;
  }
}

}  // namespace mgmc::nn
