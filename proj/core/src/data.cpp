#include "mgmc/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "text_io.hpp"

namespace mgmc::data {

void RatingDataset::validate() const {
  if (m <= 0 || n <= 0) throw InvalidInputError("dataset dimensions must be positive");
  if (values.rows() != m || values.cols() != n ||
      train_mask.rows() != m || train_mask.cols() != n ||
      test_mask.rows() != m || test_mask.cols() != n)
    throw InvalidInputError("dataset matrix shapes inconsistent");
  if (row_graph.n_vertices != m || col_graph.n_vertices != n)
    throw InvalidInputError("graph sizes do not match dataset dimensions");
  if ((train_mask.cwiseProduct(test_mask)).sum() != 0.0)
    throw InvalidInputError("train and test masks overlap");
}

namespace {

Graph community_graph(const std::vector<int>& membership, double intra_p,
                      double inter_p, std::mt19937_64& rng) {
  const int n = static_cast<int>(membership.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Graph g;
  g.n_vertices = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double p = membership[i] == membership[j] ? intra_p : inter_p;
      if (u(rng) < p) g.edges.push_back({i, j, 1.0});
    }
  return g;
}

std::vector<int> assign_communities(int n, int k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, k - 1);
  std::vector<int> membership(n);
  for (auto& c : membership) c = pick(rng);
  // every community gets at least one member so graphs keep their structure
  for (int c = 0; c < k && c < n; ++c) membership[c] = c;
  return membership;
}

}  // namespace

RatingDataset gen_synthetic(const SyntheticConfig& cfg, uint64_t seed) {
  if (cfg.item_communities > cfg.m || cfg.user_communities > cfg.n)
    throw InvalidInputError("community count exceeds dimension");
  if (cfg.train_fraction + cfg.test_fraction > 1.0)
    throw InvalidInputError("observed fractions sum above 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto item_comm = assign_communities(cfg.m, cfg.item_communities, rng);
  auto user_comm = assign_communities(cfg.n, cfg.user_communities, rng);

  // Community-level latent factors; each vertex inherits its community row
  // plus a small jitter, keeping rank <= cfg.rank exactly.
  Matrix item_latent(cfg.item_communities, cfg.rank);
  for (int i = 0; i < item_latent.rows(); ++i)
    for (int j = 0; j < item_latent.cols(); ++j) item_latent(i, j) = gauss(rng);
  Matrix user_latent(cfg.user_communities, cfg.rank);
  for (int i = 0; i < user_latent.rows(); ++i)
    for (int j = 0; j < user_latent.cols(); ++j) user_latent(i, j) = gauss(rng);

  const double factor_scale = 1.0 / std::pow(static_cast<double>(cfg.rank), 0.25);
  Matrix w(cfg.m, cfg.rank), h(cfg.n, cfg.rank);
  for (int i = 0; i < cfg.m; ++i)
    for (int j = 0; j < cfg.rank; ++j)
      w(i, j) = factor_scale *
                (item_latent(item_comm[i], j) + cfg.factor_jitter * gauss(rng));
  for (int i = 0; i < cfg.n; ++i)
    for (int j = 0; j < cfg.rank; ++j)
      h(i, j) = factor_scale *
                (user_latent(user_comm[i], j) + cfg.factor_jitter * gauss(rng));

  Matrix truth = w * h.transpose();
  if (cfg.noise > 0.0)
    for (int i = 0; i < cfg.m; ++i)
      for (int j = 0; j < cfg.n; ++j) truth(i, j) += cfg.noise * gauss(rng);

  RatingDataset ds;
  ds.m = cfg.m;
  ds.n = cfg.n;
  ds.truth = truth;
  ds.row_graph = community_graph(item_comm, cfg.intra_edge_prob,
                                 cfg.inter_edge_prob, rng);
  ds.col_graph = community_graph(user_comm, cfg.intra_edge_prob,
                                 cfg.inter_edge_prob, rng);

  // Disjoint train/test entry samples without replacement.
  const int64_t total = static_cast<int64_t>(cfg.m) * cfg.n;
  std::vector<int64_t> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int64_t n_train = static_cast<int64_t>(cfg.train_fraction * total);
  const int64_t n_test = static_cast<int64_t>(cfg.test_fraction * total);
  ds.train_mask = Matrix::Zero(cfg.m, cfg.n);
  ds.test_mask = Matrix::Zero(cfg.m, cfg.n);
  ds.values = Matrix::Zero(cfg.m, cfg.n);
  for (int64_t t = 0; t < n_train + n_test; ++t) {
    int i = static_cast<int>(idx[t] % cfg.m);
    int j = static_cast<int>(idx[t] / cfg.m);
    (t < n_train ? ds.train_mask : ds.test_mask)(i, j) = 1.0;
    ds.values(i, j) = truth(i, j);
  }
  ds.validate();
  return ds;
}

std::pair<Matrix, Matrix> split_entries(const Matrix& observed_mask,
                                        double fraction, uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidInputError("split fraction must be in (0, 1)");
  std::vector<std::pair<int, int>> obs;
  for (int j = 0; j < observed_mask.cols(); ++j)
    for (int i = 0; i < observed_mask.rows(); ++i)
      if (observed_mask(i, j) != 0.0) obs.emplace_back(i, j);
  if (obs.empty()) throw InvalidInputError("no observed entries to split");
  std::mt19937_64 rng(seed);
  std::shuffle(obs.begin(), obs.end(), rng);
  auto n_train = static_cast<size_t>(fraction * static_cast<double>(obs.size()));
  Matrix train = Matrix::Zero(observed_mask.rows(), observed_mask.cols());
  Matrix test = Matrix::Zero(observed_mask.rows(), observed_mask.cols());
  for (size_t t = 0; t < obs.size(); ++t)
    (t < n_train ? train : test)(obs[t].first, obs[t].second) = 1.0;
  return {train, test};
}

namespace {

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string tok;
  std::istringstream ss(s);
  while (std::getline(ss, tok, sep)) out.push_back(tok);
  return out;
}

}  // namespace

RatingDataset load_movielens(const std::filesystem::path& ratings,
                             const std::filesystem::path& user_features,
                             const std::filesystem::path& item_features,
                             double train_fraction, uint64_t seed, int knn) {
  // Item features: "id|title|date|video date|url|genre flags...".
  auto item_lines = detail::read_lines(item_features);
  std::vector<Vector> item_feats;
  std::map<int, int> item_index;  // 1-based id -> 0-based row
  int lineno = 0;
  for (const auto& line : item_lines) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_on(line, '|');
    if (f.size() < 6)
      throw ParseError(item_features.string() + ":" + std::to_string(lineno) +
                       ": too few fields");
    int id;
    try {
      id = std::stoi(f[0]);
    } catch (...) {
      throw ParseError(item_features.string() + ":" + std::to_string(lineno) +
                       ": bad item id");
    }
    double year = 0.0;
    if (f[2].size() >= 4) {
      try {
        year = (std::stod(f[2].substr(f[2].size() - 4)) - 1950.0) / 50.0;
      } catch (...) {
        year = 0.0;
      }
    }
    Vector v(1 + static_cast<int>(f.size()) - 5);
    v(0) = year;
    for (size_t g = 5; g < f.size(); ++g)
      v(static_cast<int>(g) - 4) = f[g] == "1" ? 1.0 : 0.0;
    item_index[id] = static_cast<int>(item_feats.size());
    item_feats.push_back(v);
  }

  // User features: "id|age|gender|occupation|zip".
  auto user_lines = detail::read_lines(user_features);
  std::vector<std::array<std::string, 3>> raw_users;  // age, gender, occupation
  std::map<int, int> user_index;
  std::set<std::string> occupations;
  lineno = 0;
  for (const auto& line : user_lines) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_on(line, '|');
    if (f.size() < 4)
      throw ParseError(user_features.string() + ":" + std::to_string(lineno) +
                       ": too few fields");
    int id;
    try {
      id = std::stoi(f[0]);
    } catch (...) {
      throw ParseError(user_features.string() + ":" + std::to_string(lineno) +
                       ": bad user id");
    }
    user_index[id] = static_cast<int>(raw_users.size());
    raw_users.push_back({f[1], f[2], f[3]});
    occupations.insert(f[3]);
  }
  std::map<std::string, int> occ_index;
  for (const auto& o : occupations)
    occ_index[o] = static_cast<int>(occ_index.size());
  std::vector<Vector> user_feats;
  for (const auto& [age, gender, occ] : raw_users) {
    Vector v = Vector::Zero(2 + static_cast<int>(occ_index.size()));
    try {
      v(0) = std::stod(age) / 100.0;
    } catch (...) {
      v(0) = 0.0;
    }
    v(1) = gender == "M" ? 1.0 : 0.0;
    v(2 + occ_index.at(occ)) = 1.0;
    user_feats.push_back(v);
  }

  // Ratings.
  auto rating_lines = detail::read_lines(ratings);
  RatingDataset ds;
  ds.m = static_cast<int>(item_feats.size());
  ds.n = static_cast<int>(user_feats.size());
  ds.values = Matrix::Zero(ds.m, ds.n);
  Matrix observed = Matrix::Zero(ds.m, ds.n);
  lineno = 0;
  for (const auto& line : rating_lines) {
    ++lineno;
    if (line.empty()) continue;
    int user, item;
    double rating;
    long long ts;
    if (std::sscanf(line.c_str(), "%d\t%d\t%lf\t%lld", &user, &item, &rating,
                    &ts) != 4)
      throw ParseError(ratings.string() + ":" + std::to_string(lineno) +
                       ": expected 'user<TAB>item<TAB>rating<TAB>timestamp'");
    auto ui = user_index.find(user);
    auto ii = item_index.find(item);
    if (ui == user_index.end())
      throw ParseError(ratings.string() + ":" + std::to_string(lineno) +
                       ": unknown user id " + std::to_string(user));
    if (ii == item_index.end())
      throw ParseError(ratings.string() + ":" + std::to_string(lineno) +
                       ": unknown item id " + std::to_string(item));
    ds.values(ii->second, ui->second) = rating;
    observed(ii->second, ui->second) = 1.0;
  }

  std::tie(ds.train_mask, ds.test_mask) =
      split_entries(observed, train_fraction, seed);
  ds.row_graph = build_knn_graph(item_feats, knn);
  ds.col_graph = build_knn_graph(user_feats, knn);
  ds.validate();
  return ds;
}

void save_dataset(const RatingDataset& ds, const std::filesystem::path& dir) {
  ds.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json meta;
  meta["m"] = ds.m;
  meta["n"] = ds.n;
  meta["has_truth"] = ds.truth.has_value();
  {
    std::ofstream out(dir / "meta.json");
    if (!out) throw ParseError("cannot write " + (dir / "meta.json").string());
    out << meta.dump(2) << "\n";
  }
  {
    std::ofstream out(dir / "observed.tsv");
    for (int j = 0; j < ds.n; ++j)
      for (int i = 0; i < ds.m; ++i) {
        const char* split = nullptr;
        if (ds.train_mask(i, j) != 0.0) split = "train";
        else if (ds.test_mask(i, j) != 0.0) split = "test";
        else continue;
        out << i << "\t" << j << "\t" << detail::format_double(ds.values(i, j))
            << "\t" << split << "\n";
      }
  }
  write_edge_list(ds.row_graph, dir / "row_graph.tsv");
  write_edge_list(ds.col_graph, dir / "col_graph.tsv");
  if (ds.truth) {
    std::ofstream out(dir / "truth.tsv");
    for (int i = 0; i < ds.m; ++i) {
      for (int j = 0; j < ds.n; ++j)
        out << (j ? "\t" : "") << detail::format_double((*ds.truth)(i, j));
      out << "\n";
    }
  }
}

RatingDataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "meta.json");
  if (!meta_in) throw ParseError("cannot open " + (dir / "meta.json").string());
  nlohmann::json meta;
  meta_in >> meta;
  RatingDataset ds;
  ds.m = meta.at("m").get<int>();
  ds.n = meta.at("n").get<int>();
  ds.values = Matrix::Zero(ds.m, ds.n);
  ds.train_mask = Matrix::Zero(ds.m, ds.n);
  ds.test_mask = Matrix::Zero(ds.m, ds.n);

  auto obs_path = dir / "observed.tsv";
  if (!std::filesystem::exists(obs_path) &&
      std::filesystem::exists(dir / "observed.tsv.gz"))
    obs_path = dir / "observed.tsv.gz";
  auto lines = detail::read_lines(obs_path);
  int lineno = 0;
  for (const auto& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    int i, j;
    double v;
    char split[16];
    if (std::sscanf(line.c_str(), "%d\t%d\t%lf\t%15s", &i, &j, &v, split) != 4)
      throw ParseError(obs_path.string() + ":" + std::to_string(lineno) +
                       ": expected 'i<TAB>j<TAB>value<TAB>split'");
    ds.values(i, j) = v;
    if (std::string(split) == "train") ds.train_mask(i, j) = 1.0;
    else if (std::string(split) == "test") ds.test_mask(i, j) = 1.0;
    else
      throw ParseError(obs_path.string() + ":" + std::to_string(lineno) +
                       ": split must be 'train' or 'test'");
  }
  ds.row_graph = read_edge_list(dir / "row_graph.tsv");
  ds.col_graph = read_edge_list(dir / "col_graph.tsv");
  if (meta.value("has_truth", false)) {
    auto tlines = detail::read_lines(dir / "truth.tsv");
    Matrix truth(ds.m, ds.n);
    for (int i = 0; i < ds.m; ++i) {
      auto cells = split_on(tlines.at(i), '\t');
      if (static_cast<int>(cells.size()) != ds.n)
        throw ParseError((dir / "truth.tsv").string() + ": row " +
                         std::to_string(i) + " has wrong width");
      for (int j = 0; j < ds.n; ++j) truth(i, j) = std::stod(cells[j]);
    }
    ds.truth = truth;
  }
  ds.validate();
  return ds;
}

}  // namespace mgmc::data
