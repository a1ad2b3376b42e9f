// Command-line front end: dataset generation, model training, evaluation,
// classical baselines, filter export, and method comparison.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgmc/baselines.hpp"
#include "mgmc/data.hpp"
#include "mgmc/errors.hpp"
#include "mgmc/nn.hpp"
#include "mgmc/spectral.hpp"
#include "mgmc/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

uint64_t fnv1a_file(const fs::path& path) {
  uint64_t h = 1469598103934665603ull;
  std::ifstream in(path, std::ios::binary);
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!in) break;
  }
  return h;
}

uint64_t hash_inputs(const std::vector<fs::path>& inputs) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file()) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) h ^= fnv1a_file(f) + 0x9e3779b97f4a7c15ull;
    } else if (fs::is_regular_file(p)) {
      h ^= fnv1a_file(p) + 0x9e3779b97f4a7c15ull;
    }
  }
  return h;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& config, uint64_t seed,
                    const std::vector<fs::path>& inputs,
                    const std::vector<fs::path>& outputs) {
  fs::create_directories(dir);
  json m;
  m["command"] = command;
  m["config"] = config;
  m["seed"] = seed;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash_inputs(inputs)));
  m["input_hash"] = hex;
  json outs = json::array();
  for (const auto& o : outputs) outs.push_back(o.string());
  m["outputs"] = outs;
  std::ofstream out(dir / "run_manifest.json");
  out << m.dump(2) << "\n";
}

// Fills unset options from a JSON config file; CLI flags win.
struct ConfigOverlay {
  json j;
  explicit ConfigOverlay(const std::string& path) {
    if (path.empty()) return;
    std::ifstream in(path);
    if (!in) throw mgmc::ParseError("cannot open config file " + path);
    in >> j;
  }
  template <typename T>
  void apply(const CLI::Option* opt, const char* key, T& target) const {
    if (opt->count() == 0 && j.contains(key)) target = j.at(key).get<T>();
  }
};

std::string default_data_dir() {
  const char* env = std::getenv("MGMC_DATA_DIR");
  return env ? env : "";
}

mgmc::data::RatingDataset load_data_arg(const std::string& data) {
  std::string dir = data.empty() ? default_data_dir() : data;
  if (dir.empty())
    throw mgmc::InvalidInputError(
        "no dataset directory given (use --data or MGMC_DATA_DIR)");
  if (!fs::exists(dir))
    throw mgmc::ParseError("dataset directory not found: " + dir);
  return mgmc::data::load_dataset(dir);
}

mgmc::Vector response_grid(int points) {
  // rating-domain eigenvalues in [0, 2] mapped by lambda~ = lambda - 1
  mgmc::Vector g(points);
  for (int i = 0; i < points; ++i)
    g(i) = -1.0 + 2.0 * static_cast<double>(i) / (points - 1);
  return g;
}

json train_config_json(const mgmc::train::TrainConfig& c, const std::string& model) {
  return json{{"model", model},       {"lr", c.learning_rate},
              {"mu", c.mu},           {"T", c.T},
              {"p", c.p},             {"q", c.q},
              {"hidden", c.hidden},   {"rank", c.rank},
              {"iters", c.max_iters}, {"eval_cadence", c.eval_cadence},
              {"patience", c.patience}, {"seed", c.seed}};
}

int run_train(const std::string& model, const std::string& data,
              const std::string& out_dir, const mgmc::train::TrainConfig& cfg) {
  auto ds = load_data_arg(data);
  fs::path out(out_dir);
  write_manifest(out, "train", train_config_json(cfg, model), cfg.seed,
                 {fs::path(data)},
                 {out / "checkpoint.json", out / "history.csv"});
  auto kind = model == "rgcnn" ? mgmc::train::ModelKind::full
                               : mgmc::train::ModelKind::factorized;
  auto result = mgmc::train::train(kind, ds, cfg);
  mgmc::nn::save_checkpoint(out / "checkpoint.json", model,
                            result.model_config(), result.params());
  result.history.write_csv(out / "history.csv");
  const auto& last = result.history.records.back();
  std::cout << "trained " << model << ": iters=" << last.iteration
            << " loss=" << last.loss << " train_rmse=" << last.train_rmse
            << " test_rmse=" << last.test_rmse << "\n";
  return 0;
}

mgmc::Matrix predict_from_checkpoint(const mgmc::nn::Checkpoint& ck,
                                     const mgmc::data::RatingDataset& ds) {
  auto lap_r = mgmc::laplacian(ds.row_graph);
  auto lap_c = mgmc::laplacian(ds.col_graph);
  mgmc::ad::Tape tape;
  if (ck.kind == "rgcnn") {
    mgmc::nn::RgcnnModel model(ck.cfg);
    mgmc::nn::restore_params(model.params(), ck);
    auto vars = model.params().bind(tape);
    auto diff = model.diffuse(tape, vars, mgmc::train::initial_matrix(ds),
                              lap_r.rescaled, lap_c.rescaled, ck.cfg.T);
    return tape.value(diff.x_final);
  }
  mgmc::nn::SrgcnnModel model(ck.cfg);
  mgmc::nn::restore_params(model.params(), ck);
  auto [w0, h0] = mgmc::train::initial_factors(ds, ck.cfg.rank);
  auto vars = model.params().bind(tape);
  auto diff = model.diffuse(tape, vars, w0, h0, lap_r.rescaled, lap_c.rescaled,
                            ck.cfg.T);
  return tape.value(diff.w_final) * tape.value(diff.h_final).transpose();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based matrix completion: recurrent multi-graph CNN "
               "models, classical baselines, and dataset tooling"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "internal parallelism bound")
      ->default_val(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (flags override)");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "generate a community-structured dataset");
  mgmc::data::SyntheticConfig syn;
  uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "RNG seed")->default_val(0);
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  auto* o_m = gen->add_option("--rows", syn.m, "item count");
  auto* o_n = gen->add_option("--cols", syn.n, "user count");
  auto* o_kr = gen->add_option("--item-communities", syn.item_communities);
  auto* o_kc = gen->add_option("--user-communities", syn.user_communities);
  auto* o_rank = gen->add_option("--rank", syn.rank, "latent rank");
  auto* o_noise = gen->add_option("--noise", syn.noise, "score noise level");
  auto* o_train = gen->add_option("--train-fraction", syn.train_fraction);
  auto* o_test = gen->add_option("--test-fraction", syn.test_fraction);

  // train
  auto* tr = app.add_subcommand("train", "train a diffusion model");
  std::string tr_model = "rgcnn", tr_data, tr_out = "run";
  mgmc::train::TrainConfig tcfg;
  tr->add_option("--model", tr_model, "rgcnn|srgcnn")
      ->check(CLI::IsMember({"rgcnn", "srgcnn"}));
  tr->add_option("--data", tr_data, "dataset directory");
  tr->add_option("--out", tr_out, "output directory");
  auto* o_iters = tr->add_option("--iters", tcfg.max_iters);
  auto* o_lr = tr->add_option("--lr", tcfg.learning_rate);
  auto* o_mu = tr->add_option("--mu", tcfg.mu);
  auto* o_T = tr->add_option("--steps", tcfg.T, "diffusion steps T");
  auto* o_p = tr->add_option("--cheb-order", tcfg.p);
  auto* o_q = tr->add_option("--channels", tcfg.q);
  auto* o_hidden = tr->add_option("--hidden", tcfg.hidden);
  auto* o_trank = tr->add_option("--rank", tcfg.rank);
  auto* o_seed = tr->add_option("--seed", tcfg.seed);
  auto* o_cad = tr->add_option("--eval-cadence", tcfg.eval_cadence);
  auto* o_pat = tr->add_option("--patience", tcfg.patience);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "RMSE of a checkpoint on a split");
  std::string ev_data, ev_ckpt, ev_split = "test";
  ev->add_option("--data", ev_data, "dataset directory");
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--split", ev_split, "test|train")
      ->check(CLI::IsMember({"test", "train"}));

  // baseline
  auto* bl = app.add_subcommand("baseline", "run a classical solver");
  std::string bl_method, bl_data, bl_out;
  double bl_mu = 1.0, bl_tau = 1e-2, bl_step = 1.0, bl_lr = 0.0;
  int bl_iters = 2000, bl_rank = 15, bl_sweeps = 20;
  bool bl_users_only = false;
  bl->add_option("--method", bl_method, "svt|gmc|grals")
      ->required()
      ->check(CLI::IsMember({"svt", "gmc", "grals"}));
  bl->add_option("--data", bl_data, "dataset directory");
  bl->add_option("--out", bl_out, "metrics CSV to append to");
  bl->add_option("--mu", bl_mu);
  bl->add_option("--tau", bl_tau, "SVT threshold");
  bl->add_option("--step", bl_step, "SVT step size");
  bl->add_option("--lr", bl_lr, "GMC step size (0 = safe default)");
  bl->add_option("--iters", bl_iters);
  bl->add_option("--rank", bl_rank);
  bl->add_option("--sweeps", bl_sweeps);
  bl->add_flag("--users-graph-only", bl_users_only,
               "regularize only via the user graph");

  // export-filters
  auto* ef = app.add_subcommand("export-filters",
                                "write learned filter responses as CSV");
  std::string ef_ckpt, ef_out = "filters";
  int ef_points = 101, ef_max_filters = 8;
  ef->add_option("--checkpoint", ef_ckpt)->required();
  ef->add_option("--out", ef_out, "output directory");
  ef->add_option("--grid-points", ef_points);
  ef->add_option("--max-filters", ef_max_filters);

  // compare
  auto* cp = app.add_subcommand("compare",
                                "method comparison table (CSV)");
  std::string cp_data, cp_out = "compare.csv";
  int cp_iters = 1000, cp_rank = 15;
  double cp_mu = 1.0;
  uint64_t cp_seed = 0;
  cp->add_option("--data", cp_data, "dataset directory");
  cp->add_option("--out", cp_out, "output CSV");
  cp->add_option("--iters", cp_iters, "training iterations per model");
  cp->add_option("--rank", cp_rank);
  cp->add_option("--mu", cp_mu);
  cp->add_option("--seed", cp_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage error
  }
  Eigen::setNbThreads(threads);

  try {
    ConfigOverlay overlay(config_path);

    if (gen->parsed()) {
      overlay.apply(o_m, "rows", syn.m);
      overlay.apply(o_n, "cols", syn.n);
      overlay.apply(o_kr, "item_communities", syn.item_communities);
      overlay.apply(o_kc, "user_communities", syn.user_communities);
      overlay.apply(o_rank, "rank", syn.rank);
      overlay.apply(o_noise, "noise", syn.noise);
      overlay.apply(o_train, "train_fraction", syn.train_fraction);
      overlay.apply(o_test, "test_fraction", syn.test_fraction);
      json cfg{{"rows", syn.m},
               {"cols", syn.n},
               {"item_communities", syn.item_communities},
               {"user_communities", syn.user_communities},
               {"rank", syn.rank},
               {"noise", syn.noise},
               {"train_fraction", syn.train_fraction},
               {"test_fraction", syn.test_fraction}};
      write_manifest(gen_out, "gen-synthetic", cfg, gen_seed, {},
                     {fs::path(gen_out) / "observed.tsv"});
      auto ds = mgmc::data::gen_synthetic(syn, gen_seed);
      mgmc::data::save_dataset(ds, gen_out);
      std::cout << "wrote dataset " << gen_out << " (" << ds.m << "x" << ds.n
                << ", " << ds.train_count() << " train / " << ds.test_count()
                << " test entries)\n";
      return 0;
    }

    if (tr->parsed()) {
      overlay.apply(o_iters, "iters", tcfg.max_iters);
      overlay.apply(o_lr, "lr", tcfg.learning_rate);
      overlay.apply(o_mu, "mu", tcfg.mu);
      overlay.apply(o_T, "steps", tcfg.T);
      overlay.apply(o_p, "cheb_order", tcfg.p);
      overlay.apply(o_q, "channels", tcfg.q);
      overlay.apply(o_hidden, "hidden", tcfg.hidden);
      overlay.apply(o_trank, "rank", tcfg.rank);
      overlay.apply(o_seed, "seed", tcfg.seed);
      overlay.apply(o_cad, "eval_cadence", tcfg.eval_cadence);
      overlay.apply(o_pat, "patience", tcfg.patience);
      return run_train(tr_model, tr_data, tr_out, tcfg);
    }

    if (ev->parsed()) {
      auto ds = load_data_arg(ev_data);
      auto ck = mgmc::nn::load_checkpoint(ev_ckpt);
      auto pred = predict_from_checkpoint(ck, ds);
      const auto& mask = ev_split == "test" ? ds.test_mask : ds.train_mask;
      std::cout << "rmse(" << ev_split
                << ") = " << mgmc::train::rmse(pred, ds.values, mask) << "\n";
      return 0;
    }

    if (bl->parsed()) {
      auto ds = load_data_arg(bl_data);
      auto lap_r = mgmc::laplacian(ds.row_graph);
      auto lap_c = mgmc::laplacian(ds.col_graph);
      mgmc::Matrix pred;
      if (bl_method == "svt") {
        auto r = mgmc::baselines::svt_complete(ds.values, ds.train_mask,
                                               bl_tau, bl_step, bl_iters);
        pred = r.x;
      } else if (bl_method == "gmc") {
        auto r = mgmc::baselines::gmc_complete(ds.values, ds.train_mask, lap_r,
                                               lap_c, bl_mu, bl_lr, bl_iters);
        pred = r.x;
      } else {
        mgmc::baselines::GralsOptions opts;
        opts.sweeps = bl_sweeps;
        opts.users_graph_only = bl_users_only;
        auto r = mgmc::baselines::graph_reg_als(ds.values, ds.train_mask,
                                                lap_r, lap_c, bl_mu, bl_rank,
                                                opts);
        if (!r.cg_converged)
          std::cerr << "warning: CG did not fully converge; reporting best iterate\n";
        pred = r.w * r.h.transpose();
      }
      double test = mgmc::train::rmse(pred, ds.values, ds.test_mask);
      double train = mgmc::train::rmse(pred, ds.values, ds.train_mask);
      std::cout << bl_method << ": train_rmse=" << train
                << " test_rmse=" << test << "\n";
      if (!bl_out.empty()) {
        bool fresh = !fs::exists(bl_out);
        std::ofstream out(bl_out, std::ios::app);
        if (fresh) out << "method,train_rmse,test_rmse\n";
        out << bl_method << "," << train << "," << test << "\n";
      }
      return 0;
    }

    if (ef->parsed()) {
      auto ck = mgmc::nn::load_checkpoint(ef_ckpt);
      fs::create_directories(ef_out);
      auto grid = response_grid(ef_points);
      int p1 = ck.cfg.p + 1;
      if (ck.kind == "rgcnn") {
        // conv theta is the first parameter: q x (p+1)^2, one row per filter
        const mgmc::Matrix& theta = ck.params.at(0).second;
        int count = std::min<int>(ef_max_filters, static_cast<int>(theta.rows()));
        for (int f = 0; f < count; ++f) {
          mgmc::Matrix coeff(p1, p1);
          for (int j = 0; j < p1; ++j)
            for (int k = 0; k < p1; ++k) coeff(j, k) = theta(f, j * p1 + k);
          mgmc::spectral::export_filter_response_2d(
              coeff, grid, grid,
              fs::path(ef_out) / ("filters_2d_ch" + std::to_string(f + 1) + ".csv"));
        }
        std::cout << "wrote " << count << " two-dimensional responses to "
                  << ef_out << "\n";
      } else {
        // parameter 0 is row.conv.theta, the col side follows the row block
        for (const auto& side : {std::string("row"), std::string("col")}) {
          const mgmc::Matrix* theta = nullptr;
          for (const auto& [name, value] : ck.params)
            if (name == side + ".conv.theta") theta = &value;
          if (!theta) throw mgmc::ParseError("checkpoint lacks " + side + " filters");
          int count = std::min<int>(ef_max_filters, static_cast<int>(theta->rows()));
          // responses of the first input channel's coefficients
          mgmc::Matrix thetas(p1, count);
          for (int f = 0; f < count; ++f)
            for (int j = 0; j < p1; ++j) thetas(j, f) = (*theta)(f, j);
          mgmc::spectral::export_filter_responses_1d(
              thetas, grid, fs::path(ef_out) / (side + "_filters.csv"));
        }
        std::cout << "wrote 1-D responses to " << ef_out << "\n";
      }
      return 0;
    }

    if (cp->parsed()) {
      auto ds = load_data_arg(cp_data);
      auto lap_r = mgmc::laplacian(ds.row_graph);
      auto lap_c = mgmc::laplacian(ds.col_graph);
      std::ofstream out(cp_out);
      out << "method,parameters,complexity,rmse\n";
      {
        auto r = mgmc::baselines::gmc_complete(ds.values, ds.train_mask, lap_r,
                                               lap_c, cp_mu, 0.0, cp_iters * 5);
        out << "gmc," << static_cast<long long>(ds.m) * ds.n << ",O(mn),"
            << mgmc::train::rmse(r.x, ds.values, ds.test_mask) << "\n";
      }
      {
        auto r = mgmc::baselines::graph_reg_als(ds.values, ds.train_mask,
                                                lap_r, lap_c, cp_mu, cp_rank);
        out << "grals," << static_cast<long long>(ds.m + ds.n) * cp_rank
            << ",O(m+n),"
            << mgmc::train::rmse(r.w * r.h.transpose(), ds.values, ds.test_mask)
            << "\n";
      }
      for (const auto& model : {std::string("rgcnn"), std::string("srgcnn")}) {
        mgmc::train::TrainConfig c;
        c.max_iters = cp_iters;
        c.mu = cp_mu;
        c.rank = cp_rank;
        c.seed = cp_seed;
        auto kind = model == "rgcnn" ? mgmc::train::ModelKind::full
                                     : mgmc::train::ModelKind::factorized;
        auto r = mgmc::train::train(kind, ds, c);
        out << model << "," << r.params().count()
            << (model == "rgcnn" ? ",O(mn)," : ",O(m+n),")
            << mgmc::train::rmse(r.prediction, ds.values, ds.test_mask) << "\n";
      }
      std::cout << "wrote " << cp_out << "\n";
      return 0;
    }
  } catch (const mgmc::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
