#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "xql/dataset.hpp"
#include "xql/errors.hpp"
#include "xql/extreme_q.hpp"
#include "xql/gem.hpp"
#include "xql/gumbel.hpp"
#include "xql/mdp.hpp"
#include "xql/policy.hpp"
#include "xql/regression.hpp"
#include "xql/result_io.hpp"
#include "xql/rng.hpp"

namespace xql {

namespace {

namespace fs = std::filesystem;

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open config " + path);
  json cfg;
  in >> cfg;
  return cfg;
}

std::string resolve_out_dir(const std::string& flag_out, const json& cfg) {
  if (!flag_out.empty()) return flag_out;
  if (cfg.contains("out_dir")) return cfg["out_dir"].get<std::string>();
  if (const char* env = std::getenv("XQL_OUT_DIR")) return env;
  return ".";
}

std::vector<std::uint64_t> resolve_seeds(const json& cfg,
                                         std::optional<std::uint64_t> flag_seed) {
  if (flag_seed) return {*flag_seed};
  if (cfg.contains("seeds")) return cfg["seeds"].get<std::vector<std::uint64_t>>();
  return {0};
}

Gridworld gridworld_from_config(const json& mdp_cfg) {
  const std::string path = mdp_cfg.at("layout_path").get<std::string>();
  if (!fs::exists(path)) throw parse_error("layout file does not exist: " + path);
  return load_gridworld(path, mdp_cfg.value("step_reward", -1.0),
                        mdp_cfg.value("goal_reward", 10.0),
                        mdp_cfg.value("slip", 0.0), mdp_cfg.value("gamma", 0.99));
}

TransitionDataset dataset_from_config(const json& cfg, const Gridworld& gw,
                                      std::uint64_t seed) {
  const json d = cfg.value("dataset", json::object());
  const std::size_t n = d.value("n", 50000);
  const int cap = d.value("episode_cap", 200);
  const bool uniform_starts = d.value("uniform_starts", true);
  const PolicyTable behavior =
      PolicyTable::uniform(gw.mdp.n_states, gw.mdp.n_actions);
  std::vector<double> start;
  if (!uniform_starts) start = gw.start_distribution();
  TransitionDataset ds = generate_dataset(gw.mdp, behavior, n, seed, cap, start);
  ds.behavior_policy_id = "uniform";
  return ds;
}

XqlConfig xql_config_from_json(const json& cfg, std::optional<double> beta,
                               std::uint64_t seed, XqlMode mode) {
  const json x = cfg.value("xql", json::object());
  XqlConfig out;
  out.beta = beta.value_or(x.value("beta", 2.0));
  out.clip = x.value("clip", 7.0);
  out.lr = x.value("lr", 0.1);
  out.batch_size = x.value("batch_size", 256);
  out.total_steps = x.value("total_steps", 20000L);
  out.v_updates = x.value("v_updates", 1);
  out.seed = seed;
  out.mode = mode;
  out.validate();
  return out;
}

int run_gumbel_fit(const std::string& data_path, const std::string& out_dir) {
  const SampleBatch batch = load_samples_csv(data_path);
  const GumbelParams g = fit_gumbel_mle(batch);
  const GaussianParams n = fit_gaussian_mle(batch);
  const double gll = log_likelihood(batch, g), nll = log_likelihood(batch, n);

  json result{{"n", batch.size()},
              {"gumbel", {{"loc", g.loc}, {"scale", g.scale}, {"loglik", gll}}},
              {"gaussian", {{"mean", n.mean}, {"std", n.std}, {"loglik", nll}}}};
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "fit.json").string(), result.dump(2) + "\n");
  std::printf("gumbel fit: n=%zu loc=%.5f scale=%.5f gumbel_ll=%.5f gaussian_ll=%.5f\n",
              batch.size(), g.loc, g.scale, gll, nll);
  return 0;
}

int run_gumbel_regress(const json& cfg, std::optional<double> beta_flag,
                       const std::string& out_dir,
                       const std::vector<std::uint64_t>& seeds) {
  const json r = cfg.value("regression", json::object());
  const std::size_t n = r.value("n_samples", 10000);
  RegressionConfig rc;
  rc.beta = beta_flag.value_or(r.value("beta", 1.0));
  rc.clip = r.value("clip", 7.0);
  rc.lr = r.value("lr", 0.5);
  rc.batch_size = r.value("batch_size", static_cast<int>(n));
  rc.max_steps = r.value("max_steps", 5000L);
  rc.tol = r.value("tol", 1e-10);

  fs::create_directories(out_dir);
  json runs = json::array();
  for (std::uint64_t seed : seeds) {
    rc.seed = derive_seed(seed, 1);
    Rng rng(seed);
    SampleBatch samples;
    samples.values.resize(n);
    const json dist = r.value("dist", json{{"kind", "gaussian"}});
    if (dist.value("kind", "gaussian") == "gumbel") {
      for (auto& v : samples.values)
        v = rng.gumbel(dist.value("loc", 0.0), dist.value("scale", 1.0));
    } else {
      for (auto& v : samples.values)
        v = dist.value("mean", 0.0) + dist.value("std", 1.0) * rng.gaussian();
    }
    const double closed = gumbel_regress_closed_form(samples, rc.beta);
    LinearModel model = LinearModel::one_hot(1);
    const TargetStream stream = [&samples](Rng& g) {
      return std::pair<int, double>{
          0, samples.values[g.uniform_int(static_cast<int>(samples.values.size()))]};
    };
    model = gumbel_regress_sgd(stream, std::move(model), rc);
    runs.push_back({{"seed", seed},
                    {"closed_form", closed},
                    {"sgd", model.weights[0]},
                    {"abs_error", std::abs(closed - model.weights[0])}});
    std::printf("gumbel regress: seed=%llu beta=%g closed=%.6f sgd=%.6f err=%.2e\n",
                static_cast<unsigned long long>(seed), rc.beta, closed,
                model.weights[0], std::abs(closed - model.weights[0]));
  }
  json result{{"beta", rc.beta}, {"runs", runs}};
  write_text_file((fs::path(out_dir) / "regress.json").string(),
                  result.dump(2) + "\n");
  write_manifest(out_dir, cfg, seeds[0]);
  return 0;
}

int run_maze_value_iter(const json& cfg, std::optional<double> beta_flag,
                        const std::string& out_dir,
                        const std::vector<std::uint64_t>& seeds) {
  const Gridworld gw = gridworld_from_config(cfg.at("mdp"));
  const json v = cfg.value("value_iter", json::object());
  XqlConfig xc;
  xc.beta = beta_flag.value_or(v.value("beta", 0.1));
  xc.clip = v.value("clip", 7.0);
  xc.total_steps = v.value("sweeps", 3000L);
  xc.lr = 1.0;
  const ValueLoss loss =
      v.value("loss", "gumbel") == std::string("squared") ? ValueLoss::squared
                                                          : ValueLoss::gumbel;

  fs::create_directories(out_dir);
  for (std::uint64_t seed : seeds) {
    xc.seed = seed;
    const TransitionDataset ds = dataset_from_config(cfg, gw, seed);
    const LinearModel init = LinearModel::one_hot(gw.mdp.n_states);
    const ValueTable learned = gumbel_value_iteration(
        ds, init, xc, gw.mdp.gamma, gw.mdp.n_states, loss);
    const SolveResult oracle = solve_hard_mdp(gw.mdp);
    double start_gap = std::abs(learned.at(gw.start) - oracle.v.at(gw.start));

    const fs::path dir =
        seeds.size() == 1 ? fs::path(out_dir)
                          : fs::path(out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    json result{{"beta", xc.beta},
                {"loss", loss == ValueLoss::gumbel ? "gumbel" : "squared"},
                {"seed", seed},
                {"learned_v", value_table_to_json(learned)},
                {"oracle_v", value_table_to_json(oracle.v)},
                {"start_state", gw.start},
                {"start_gap", start_gap}};
    write_text_file((dir / "values.json").string(), result.dump(2) + "\n");
    std::printf("maze value-iter: seed=%llu loss=%s beta=%g start_gap=%.4f\n",
                static_cast<unsigned long long>(seed),
                loss == ValueLoss::gumbel ? "gumbel" : "squared", xc.beta,
                start_gap);
  }
  write_manifest(out_dir, cfg, seeds[0]);
  return 0;
}

int run_xql(const json& cfg, std::optional<double> beta_flag,
            const std::string& out_dir, const std::vector<std::uint64_t>& seeds,
            XqlMode mode) {
  const Gridworld gw = gridworld_from_config(cfg.at("mdp"));
  fs::create_directories(out_dir);
  for (std::uint64_t seed : seeds) {
    const XqlConfig xc = xql_config_from_json(cfg, beta_flag, seed, mode);
    XqlResult result;
    if (mode == XqlMode::offline) {
      const TransitionDataset ds = dataset_from_config(cfg, gw, derive_seed(seed, 7));
      result = xql_offline(gw.mdp, ds, xc, gw.start_distribution());
    } else {
      result = xql_online(gw.mdp, xc, gw.start_distribution());
    }
    const fs::path dir =
        seeds.size() == 1 ? fs::path(out_dir)
                          : fs::path(out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    save_trace_csv(result.trace, (dir / "trace.csv").string());
    json tables{{"config",
                 {{"beta", xc.beta},
                  {"clip", xc.clip},
                  {"lr", xc.lr},
                  {"batch_size", xc.batch_size},
                  {"total_steps", xc.total_steps},
                  {"v_updates", xc.v_updates},
                  {"mode", mode == XqlMode::offline ? "offline" : "online"}}},
                {"seed", seed},
                {"q", q_table_to_json(result.q)},
                {"v", value_table_to_json(result.v)},
                {"pi", policy_table_to_json(result.pi)}};
    write_text_file((dir / "tables.json").string(), tables.dump(2) + "\n");
    const TraceRow& last = result.trace.back();
    std::printf("xql %s: seed=%llu beta=%g return=%.4f v_gap=%.4f\n",
                mode == XqlMode::offline ? "offline" : "online",
                static_cast<unsigned long long>(seed), xc.beta,
                last.policy_return, last.v_gap);
  }
  write_manifest(out_dir, cfg, seeds[0]);
  return 0;
}

int run_gem_simulate(const json& cfg, const std::string& out_dir,
                     const std::vector<std::uint64_t>& seeds) {
  const Gridworld gw = gridworld_from_config(cfg.at("mdp"));
  const json g = cfg.value("gem", json::object());
  GemConfig gc;
  const std::string family = g.value("noise_family", "gaussian");
  gc.noise_family = family == "gumbel" ? NoiseFamily::gumbel
                    : family == "uniform" ? NoiseFamily::uniform
                                          : NoiseFamily::gaussian;
  gc.noise_scale = g.value("noise_scale", 1.0);
  gc.iterations = g.value("iterations", 30);
  gc.samples_per_iter = g.value("samples_per_iter", 1000);

  fs::create_directories(out_dir);
  for (std::uint64_t seed : seeds) {
    gc.seed = seed;
    const ErrorTrace trace = noisy_q_iteration(gw.mdp, gc);
    const fs::path dir =
        seeds.size() == 1 ? fs::path(out_dir)
                          : fs::path(out_dir) / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);

    {
      std::ofstream out(dir / "residuals.csv", std::ios::binary);
      out << "iteration,residual\n";
      char buf[64];
      for (std::size_t it = 0; it < trace.residuals.size(); ++it)
        for (double v : trace.residuals[it].values) {
          std::snprintf(buf, sizeof buf, "%zu,%.17g\n", it, v);
          out << buf;
        }
    }
    {
      std::ofstream out(dir / "fits.csv", std::ios::binary);
      out << "iteration,gumbel_loc,gumbel_scale,gumbel_ll,gaussian_mean,"
             "gaussian_std,gaussian_ll\n";
      char buf[256];
      for (std::size_t it = 0; it < trace.fits.size(); ++it) {
        const IterationFit& f = trace.fits[it];
        if (!f.gumbel) continue;
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      it, f.gumbel->loc, f.gumbel->scale, f.gumbel_ll,
                      f.gaussian->mean, f.gaussian->std, f.gaussian_ll);
        out << buf;
      }
    }
    {
      std::ofstream out(dir / "target_noise.csv", std::ios::binary);
      out << "iteration,deviation\n";
      char buf[64];
      for (std::size_t it = 0; it < trace.target_noise.size(); ++it)
        for (double v : trace.target_noise[it].values) {
          std::snprintf(buf, sizeof buf, "%zu,%.17g\n", it, v);
          out << buf;
        }
    }
    const SampleBatch pooled = trace.pooled_late_residuals();
    double gll = 0.0, nll = 0.0;
    if (pooled.max() > pooled.min()) {
      gll = log_likelihood(pooled, fit_gumbel_mle(pooled));
      nll = log_likelihood(pooled, fit_gaussian_mle(pooled));
    }
    std::printf("gem simulate: seed=%llu family=%s pooled gumbel_ll=%.5f gaussian_ll=%.5f\n",
                static_cast<unsigned long long>(seed), family.c_str(), gll, nll);
  }
  write_manifest(out_dir, cfg, seeds[0]);
  return 0;
}

int run_diag_kl_dual(std::uint64_t seed, int pairs, int atoms) {
  Rng rng(seed);
  const auto random_dist = [&](int k) {
    std::vector<double> p(k);
    double sum = 0.0;
    for (double& v : p) {
      v = 0.05 + rng.uniform01();
      sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
  };
  double max_arg_err = 0.0, min_offset = 1e300, max_offset = -1e300;
  for (int i = 0; i < pairs; ++i) {
    const std::vector<double> pi = random_dist(atoms), mu = random_dist(atoms);
    const std::vector<double> x = kl_dual_maximizer_search(pi, mu);
    double kl = 0.0;
    for (int a = 0; a < atoms; ++a) kl += pi[a] * std::log(pi[a] / mu[a]);
    for (int a = 0; a < atoms; ++a)
      max_arg_err = std::max(max_arg_err,
                             std::abs(x[a] - (-std::log(pi[a] / mu[a]))));
    const double offset = kl_dual_objective(x, pi, mu) - kl;
    min_offset = std::min(min_offset, offset);
    max_offset = std::max(max_offset, offset);
  }
  std::printf("diag kl-dual: pairs=%d max|x* + log(pi/mu)|=%.3e offset in [%.12f, %.12f]\n",
              pairs, max_arg_err, min_offset, max_offset);
  return 0;
}

int run_diag_cql_chi2(std::uint64_t seed, int pairs, int atoms) {
  Rng rng(seed);
  double max_err = 0.0;
  for (int i = 0; i < pairs; ++i) {
    std::vector<double> pi(atoms), mu(atoms);
    double sp = 0.0, sm = 0.0;
    for (int a = 0; a < atoms; ++a) {
      pi[a] = 0.05 + rng.uniform01();
      mu[a] = 0.05 + rng.uniform01();
      sp += pi[a];
      sm += mu[a];
    }
    for (int a = 0; a < atoms; ++a) {
      pi[a] /= sp;
      mu[a] /= sm;
    }
    max_err = std::max(max_err,
                       std::abs(chi_square_divergence(pi, mu) - d_cql(pi, mu)));
  }
  std::printf("diag cql-chi2: pairs=%d max|chi2 - d_cql|=%.3e\n", pairs, max_err);
  return 0;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
  CLI::App app{"Extreme Q-learning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_flag, data_path;
  double beta_flag = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed_flag = 0;
  bool seed_given = false;

  const auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* copt = cmd->add_option("--config", config_path, "experiment config JSON");
    if (needs_config) copt->required();
    cmd->add_option("--beta", beta_flag, "override temperature beta");
    cmd->add_option("--seed", seed_flag, "override seed")
        ->each([&](const std::string&) { seed_given = true; });
    cmd->add_option("--out", out_flag, "output directory");
  };

  auto* gumbel = app.add_subcommand("gumbel", "Gumbel distribution tools");
  auto* gumbel_fit = gumbel->add_subcommand("fit", "MLE fit of a sample file");
  gumbel_fit->add_option("--data", data_path, "CSV with a 'value' header")->required();
  gumbel_fit->add_option("--out", out_flag, "output directory");
  auto* gumbel_regress =
      gumbel->add_subcommand("regress", "closed-form vs SGD log-partition fit");
  add_common(gumbel_regress, true);

  auto* maze = app.add_subcommand("maze", "gridworld experiments");
  auto* maze_vi = maze->add_subcommand("value-iter", "offline value iteration");
  add_common(maze_vi, true);

  auto* xql_cmd = app.add_subcommand("xql", "Extreme Q-learning");
  auto* xql_off = xql_cmd->add_subcommand("offline", "offline training");
  add_common(xql_off, true);
  auto* xql_on = xql_cmd->add_subcommand("online", "online training");
  add_common(xql_on, true);

  auto* gem = app.add_subcommand("gem", "Gumbel error model simulator");
  auto* gem_sim = gem->add_subcommand("simulate", "noisy backup propagation");
  add_common(gem_sim, true);

  auto* diag = app.add_subcommand("diag", "identity diagnostics");
  int pairs = 100, atoms = 5;
  auto* diag_kl = diag->add_subcommand("kl-dual", "KL dual maximizer check");
  diag_kl->add_option("--seed", seed_flag, "seed");
  diag_kl->add_option("--pairs", pairs, "number of random pairs");
  diag_kl->add_option("--atoms", atoms, "support size");
  auto* diag_cql = diag->add_subcommand("cql-chi2", "chi^2 == D_CQL check");
  diag_cql->add_option("--seed", seed_flag, "seed");
  diag_cql->add_option("--pairs", pairs, "number of random pairs");
  diag_cql->add_option("--atoms", atoms, "support size");

  auto* bounds = app.add_subcommand("bounds", "concentration and bias bounds");
  double xmax = 1.0, qmax = 1.0, delta = 0.1, zhat = 0.0, bbeta = 1.0;
  long nn = 10000;
  auto* bounds_pac = bounds->add_subcommand("pac", "log-partition PAC bound");
  bounds_pac->add_option("--xmax", xmax)->required();
  bounds_pac->add_option("--beta", bbeta)->required();
  bounds_pac->add_option("--delta", delta)->required();
  bounds_pac->add_option("--n", nn)->required();
  bounds_pac->add_option("--zhat", zhat, "partition estimate for the log bound");
  auto* bounds_bias = bounds->add_subcommand("bias", "LSE overestimation bias");
  bounds_bias->add_option("--qmax", qmax)->required();
  bounds_bias->add_option("--beta", bbeta)->required();

  std::vector<std::string> argv_copy(args.rbegin(), args.rend());
  try {
    app.parse(std::move(argv_copy));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::optional<double> beta_opt;
  if (!std::isnan(beta_flag)) beta_opt = beta_flag;
  std::optional<std::uint64_t> seed_opt;
  if (seed_given) seed_opt = seed_flag;

  try {
    if (gumbel_fit->parsed())
      return run_gumbel_fit(data_path, out_flag.empty() ? resolve_out_dir(out_flag, {})
                                                        : out_flag);
    if (bounds_pac->parsed()) {
      const double b = pac_bound_partition(xmax, bbeta, delta, nn);
      if (zhat > 0.0)
        std::printf("pac bounds: partition=%.5f log_partition=%.5f\n", b,
                    pac_bound_log_partition(xmax, bbeta, delta, nn, zhat));
      else
        std::printf("pac bounds: partition=%.5f\n", b);
      return 0;
    }
    if (bounds_bias->parsed()) {
      std::printf("%.5f\n", bias_bound(qmax, bbeta));
      return 0;
    }
    if (diag_kl->parsed()) return run_diag_kl_dual(seed_flag, pairs, atoms);
    if (diag_cql->parsed()) return run_diag_cql_chi2(seed_flag, pairs, atoms);

    const json cfg = load_config(config_path);
    const std::string out_dir = resolve_out_dir(out_flag, cfg);
    const std::vector<std::uint64_t> seeds = resolve_seeds(cfg, seed_opt);
    if (seeds.empty()) throw parse_error("empty seed list");

    if (gumbel_regress->parsed())
      return run_gumbel_regress(cfg, beta_opt, out_dir, seeds);
    if (maze_vi->parsed()) return run_maze_value_iter(cfg, beta_opt, out_dir, seeds);
    if (xql_off->parsed())
      return run_xql(cfg, beta_opt, out_dir, seeds, XqlMode::offline);
    if (xql_on->parsed())
      return run_xql(cfg, beta_opt, out_dir, seeds, XqlMode::online);
    if (gem_sim->parsed()) return run_gem_simulate(cfg, out_dir, seeds);
  } catch (const divergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const convergence_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::fprintf(stderr, "error: no subcommand\n");
  return 1;
}

}  // namespace xql
