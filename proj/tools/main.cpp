#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "mfg/auction.hpp"
#include "mfg/heuristic.hpp"
#include "mfg/io.hpp"
#include "mfg/omo.hpp"
#include "mfg/oracle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct CommonArgs {
  std::string config_path;
  std::string preset = "paper-sec3";
  std::string out_dir = "out";
  int workers = 0;  // 0: hardware concurrency
  long long seed = -1;
  bool preset_set = false;
  bool out_set = false;
  bool workers_set = false;
};

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key=value config file");
  cmd->add_option("--preset", args.preset, "environment preset name")
      ->each([&](const std::string&) { args.preset_set = true; });
  cmd->add_option("--out", args.out_dir, "output directory")
      ->each([&](const std::string&) { args.out_set = true; });
  cmd->add_option("--workers", args.workers, "worker threads for sweeps")
      ->each([&](const std::string&) { args.workers_set = true; });
  cmd->add_option("--seed", args.seed, "root RNG seed");
}

// Loads the config file (if any) and folds in command-line overrides; flags
// win over file values.
mfg::io::Config effective_config(const CommonArgs& args) {
  mfg::io::Config cfg;
  if (!args.config_path.empty()) cfg = mfg::io::Config::load(args.config_path);
  if (args.preset_set || !cfg.has("preset")) cfg.values["preset"] = args.preset;
  if (args.out_set || !cfg.has("out")) cfg.values["out"] = args.out_dir;
  if (args.workers_set) cfg.values["workers"] = std::to_string(args.workers);
  if (args.seed >= 0) cfg.values["seed"] = std::to_string(args.seed);
  return cfg;
}

struct Environment {
  mfg::auction::Preset preset;
  mfg::GameSpec spec;
};

Environment make_environment(const mfg::io::Config& cfg) {
  Environment env;
  env.preset = mfg::auction::preset(cfg.get_string("preset", "paper-sec3"));
  const int horizon = cfg.get_int("horizon", 0);
  if (horizon < 0) throw mfg::io::SchemaError("horizon must be >= 0");
  env.spec = mfg::auction::build_game_spec(env.preset.grid, env.preset.welfare, horizon);
  return env;
}

mfg::omo::Weights read_weights(const mfg::io::Config& cfg) {
  mfg::omo::Weights w;
  w.lambda1 = cfg.get_double("lambda1", 0.5);
  w.lambda2 = cfg.get_double("lambda2", 0.5);
  w.rho1 = cfg.get_double("rho1", 1.0);
  w.rho2 = cfg.get_double("rho2", 0.1);
  return w;
}

mfg::omo::SolverConfig read_solver(const mfg::io::Config& cfg) {
  mfg::omo::SolverConfig sc;
  sc.step_size = cfg.get_double("step_size", 0.1);
  sc.max_iters = cfg.get_int("iters", 1500);
  sc.grad_tol = cfg.get_double("grad_tol", 0.0);
  sc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  const auto mode = cfg.get_string("init", "uniform");
  if (mode == "uniform") {
    sc.init_mode = mfg::omo::InitMode::kUniform;
  } else if (mode == "random") {
    sc.init_mode = mfg::omo::InitMode::kRandom;
  } else {
    throw mfg::io::SchemaError("init must be 'uniform' or 'random'");
  }
  return sc;
}

std::filesystem::path ensure_out_dir(const mfg::io::Config& cfg) {
  std::filesystem::path dir = cfg.get_string("out", "out");
  std::filesystem::create_directories(dir);
  return dir;
}

struct Evaluation {
  double exploitability = 0.0;
  double welfare = 0.0;
  std::vector<double> metrics;
};

Evaluation evaluate_policy(const mfg::GameSpec& spec, const mfg::Policy& pi) {
  Evaluation ev;
  ev.exploitability = mfg::exploitability(spec, pi);
  auto sv = mfg::social_value(spec, mfg::propagate_flow(spec, pi));
  ev.welfare = sv.welfare;
  ev.metrics = sv.metrics;
  return ev;
}

void print_evaluation(const Evaluation& ev) {
  std::printf("exploitability %.17g\n", ev.exploitability);
  std::printf("welfare        %.17g\n", ev.welfare);
  const char* names[] = {"v_ctr", "v_sale", "v_cpc"};
  for (size_t k = 0; k < ev.metrics.size() && k < 3; ++k)
    std::printf("%-14s %.17g\n", names[k], ev.metrics[k]);
}

int cmd_solve(const CommonArgs& args) {
  auto cfg = effective_config(args);
  auto env = make_environment(cfg);
  auto weights = read_weights(cfg);
  auto solver = read_solver(cfg);
  weights.validate();
  const auto dir = ensure_out_dir(cfg);

  auto res = mfg::omo::solve(env.spec, weights, solver);
  {
    mfg::io::CsvWriter diag((dir / "diagnostics.csv").string(),
                            {"iter", "objective", "g_cs", "h_br", "comp"});
    for (size_t i = 0; i < res.trace.size(); ++i) {
      const auto& st = res.trace[i];
      diag.write_row_numeric({static_cast<double>(i + 1), st.objective, st.g_cs,
                              st.h_br, st.comp});
    }
  }
  mfg::io::write_file((dir / "checkpoint.json").string(),
                      mfg::io::checkpoint_to_json(res.iterate));
  if (res.status == mfg::omo::SolveStatus::kNonFinite) {
    std::fprintf(stderr, "solve: objective became non-finite at iteration %d; "
                         "offending iterate saved to checkpoint.json\n",
                 res.iterations);
    return kExitNumerical;
  }

  auto pi = mfg::retrieve_policy(res.iterate.d);
  mfg::io::write_file((dir / "policy.json").string(), mfg::io::policy_to_json(pi));

  auto ev = evaluate_policy(env.spec, pi);
  auto rep = mfg::omo::complementarity_check(res.iterate, env.spec);
  std::printf("solve finished: %d iterations, final step %.3g\n", res.iterations,
              res.final_step);
  print_evaluation(ev);
  std::printf("g_cs %.3e  h_br %.3e  comp %.3e  bound %s\n", rep.g_cs, rep.h_br,
              rep.comp, rep.bound_satisfied ? "ok" : "VIOLATED");
  return kExitOk;
}

struct SweepTask {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::string label;  // "NE", "MFC" or empty
};

struct SweepRow {
  SweepTask task;
  Evaluation ev;
  mfg::omo::IterationStats last;
  int iters = 0;
  long long wall_ms = 0;
  std::string status = "ok";
};

std::vector<SweepTask> sweep_grid(const mfg::io::Config& cfg) {
  std::vector<SweepTask> tasks;
  tasks.push_back({0.0, 1.0, "NE"});
  const int interior = cfg.get_int("sweep_points", 11);
  if (interior < 0) throw mfg::io::SchemaError("sweep_points must be >= 0");
  // Log-spaced ratios lambda1/lambda2 over [10^-3, 10^3] with lambda1+lambda2=1.
  const double lo = std::log(cfg.get_double("sweep_ratio_min", 1e-3));
  const double hi = std::log(cfg.get_double("sweep_ratio_max", 1e3));
  for (int i = 0; i < interior; ++i) {
    const double f = interior == 1 ? 0.5 : static_cast<double>(i) / (interior - 1);
    const double ratio = std::exp(lo + f * (hi - lo));
    const double l2 = 1.0 / (1.0 + ratio);
    tasks.push_back({1.0 - l2, l2, ""});
  }
  tasks.push_back({1.0, 0.0, "MFC"});
  return tasks;
}

int cmd_pareto(const CommonArgs& args) {
  auto cfg = effective_config(args);
  auto env = make_environment(cfg);
  auto solver = read_solver(cfg);
  const double rho1 = cfg.get_double("rho1", 1.0);
  const double rho2 = cfg.get_double("rho2", 0.1);
  const auto dir = ensure_out_dir(cfg);
  auto tasks = sweep_grid(cfg);

  int workers = cfg.get_int("workers", 0);
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));

  std::vector<SweepRow> rows(tasks.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      SweepRow& row = rows[i];
      row.task = tasks[i];
      auto sc = solver;
      sc.seed = solver.seed + i;  // deterministic per-pair stream
      const auto t0 = std::chrono::steady_clock::now();
      try {
        mfg::omo::Weights w{tasks[i].lambda1, tasks[i].lambda2, rho1, rho2};
        auto res = mfg::omo::solve(env.spec, w, sc);
        if (res.status == mfg::omo::SolveStatus::kNonFinite) {
          row.status = "nonfinite";
        } else {
          auto pi = mfg::retrieve_policy(res.iterate.d);
          row.ev = evaluate_policy(env.spec, pi);
          row.last = res.trace.empty() ? mfg::omo::IterationStats{}
                                       : res.trace.back();
          row.iters = res.iterations;
        }
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  // Sort by the competition/cooperation ratio: NE extreme first, MFC last.
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    const double ra = a.task.lambda2 == 0.0 ? std::numeric_limits<double>::infinity()
                                            : a.task.lambda1 / a.task.lambda2;
    const double rb = b.task.lambda2 == 0.0 ? std::numeric_limits<double>::infinity()
                                            : b.task.lambda1 / b.task.lambda2;
    return ra < rb;
  });

  mfg::io::CsvWriter csv((dir / "pareto.csv").string(),
                         {"lambda1", "lambda2", "exploitability", "welfare", "v_ctr",
                          "v_sale", "v_cpc", "g_cs", "h_br", "comp", "iters",
                          "wall_ms", "label", "status"});
  int ok = 0;
  for (const auto& row : rows) {
    if (row.status == "ok") ++ok;
    std::vector<std::string> cells;
    cells.push_back(mfg::io::format_double(row.task.lambda1));
    cells.push_back(mfg::io::format_double(row.task.lambda2));
    cells.push_back(mfg::io::format_double(row.ev.exploitability));
    cells.push_back(mfg::io::format_double(row.ev.welfare));
    for (int k = 0; k < 3; ++k)
      cells.push_back(mfg::io::format_double(
          k < static_cast<int>(row.ev.metrics.size()) ? row.ev.metrics[k] : 0.0));
    cells.push_back(mfg::io::format_double(row.last.g_cs));
    cells.push_back(mfg::io::format_double(row.last.h_br));
    cells.push_back(mfg::io::format_double(row.last.comp));
    cells.push_back(std::to_string(row.iters));
    cells.push_back(std::to_string(row.wall_ms));
    cells.push_back(row.task.label);
    cells.push_back(row.status);
    csv.write_row(cells);
  }
  std::printf("pareto sweep: %d/%zu rows ok, written to %s\n", ok, rows.size(),
              (dir / "pareto.csv").string().c_str());
  return ok >= 1 ? kExitOk : kExitNumerical;
}

int cmd_evaluate(const CommonArgs& args, const std::string& policy_path) {
  auto cfg = effective_config(args);
  auto env = make_environment(cfg);
  auto pi = mfg::io::policy_from_json(mfg::io::read_file(policy_path));
  if (pi.num_states != env.spec.num_states || pi.num_actions != env.spec.num_actions) {
    throw mfg::io::SchemaError("policy shape does not match the preset grid");
  }
  if (pi.horizon != env.spec.horizon) {
    throw mfg::io::SchemaError("policy horizon does not match the configured game");
  }
  auto ev = evaluate_policy(env.spec, pi);
  print_evaluation(ev);

  const auto dir = ensure_out_dir(cfg);
  mfg::io::CsvWriter csv((dir / "evaluation.csv").string(),
                         {"exploitability", "welfare", "v_ctr", "v_sale", "v_cpc"});
  csv.write_row_numeric({ev.exploitability, ev.welfare,
                         ev.metrics.size() > 0 ? ev.metrics[0] : 0.0,
                         ev.metrics.size() > 1 ? ev.metrics[1] : 0.0,
                         ev.metrics.size() > 2 ? ev.metrics[2] : 0.0});
  return kExitOk;
}

int cmd_heuristic(const CommonArgs& args) {
  auto cfg = effective_config(args);
  auto env = make_environment(cfg);
  const auto dir = ensure_out_dir(cfg);

  mfg::heuristic::HeuristicConfig hc;
  hc.kappa = cfg.get_int("kappa", 10);
  hc.eta = cfg.get_double("eta", 0.7);
  hc.horizon = cfg.get_int("steps", 1000);
  hc.percentile_lo = cfg.get_double("percentile_lo", 25.0);
  hc.percentile_hi = cfg.get_double("percentile_hi", 75.0);
  hc.validate();
  const int runs = cfg.get_int("runs", 1000);
  const int stride = cfg.get_int("traj_stride", 100);
  if (runs < 1 || stride < 1) {
    throw mfg::io::SchemaError("runs and traj_stride must be >= 1");
  }
  const std::uint64_t root_seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));

  // alpha0: truncated normal over the bid grid unless overridden to uniform.
  mfg::heuristic::BidDistribution alpha0;
  if (cfg.get_string("alpha0", "normal") == "uniform") {
    alpha0.probs.assign(env.preset.grid.bid_values.size(),
                        1.0 / env.preset.grid.bid_values.size());
  } else {
    alpha0.probs = mfg::auction::discretize_truncated_normal(
        env.preset.grid.bid_values, cfg.get_double("alpha0_mean", 1.5),
        cfg.get_double("alpha0_stddev", 1.2));
  }

  const size_t bids = env.preset.grid.bid_values.size();
  std::vector<double> final_avg(bids, 0.0);
  mfg::io::CsvWriter traj((dir / "trajectory.csv").string(),
                          {"run_id", "t", "bid_grid_index", "probability"});
  mfg::io::CsvWriter band((dir / "band.csv").string(), {"run_id", "t", "lo", "hi"});
  double expl_sum = 0.0;

  for (int run = 0; run < runs; ++run) {
    auto rc = hc;
    rc.seed = root_seed + static_cast<std::uint64_t>(run);
    auto res = mfg::heuristic::run_heuristic(env.preset.grid, alpha0, rc);
    for (size_t t = 0; t < res.alphas.size(); ++t) {
      const bool keep = t % static_cast<size_t>(stride) == 0 ||
                        t + 1 == res.alphas.size();
      if (!keep) continue;
      for (size_t i = 0; i < bids; ++i) {
        traj.write_row_numeric({static_cast<double>(run), static_cast<double>(t),
                                static_cast<double>(i), res.alphas[t].probs[i]});
      }
      if (t >= 1) {
        band.write_row_numeric({static_cast<double>(run), static_cast<double>(t),
                                res.band_lo[t - 1], res.band_hi[t - 1]});
      }
    }
    const auto& last = res.alphas.back();
    for (size_t i = 0; i < bids; ++i) final_avg[i] += last.probs[i];
    auto pi = mfg::heuristic::heuristic_policy(env.preset.grid, last,
                                               env.spec.horizon);
    expl_sum += mfg::exploitability(env.spec, pi);
  }
  for (double& v : final_avg) v /= runs;

  mfg::io::CsvWriter fin((dir / "final_alpha.csv").string(),
                         {"bid_grid_index", "bid_value", "probability"});
  for (size_t i = 0; i < bids; ++i) {
    fin.write_row_numeric({static_cast<double>(i), env.preset.grid.bid_values[i],
                           final_avg[i]});
  }
  std::printf("heuristic: %d runs, mean final-policy exploitability %.17g\n", runs,
              expl_sum / runs);
  return kExitOk;
}

int cmd_check(const CommonArgs& args) {
  auto cfg = effective_config(args);
  auto env = make_environment(cfg);
  const auto dir = ensure_out_dir(cfg);
  const bool corrupt = cfg.get_int("corrupt_gradient", 0) != 0;  // negative control
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 0));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  std::uniform_real_distribution<double> wide(-2.0, 2.0);

  std::vector<mfg::oracle::OracleReport> reports;
  const int S = env.spec.num_states, A = env.spec.num_actions, T = env.spec.horizon;
  const int SA = S * A;

  // Gradient vs central finite differences at random interior iterates.
  for (int rep = 0; rep < 5; ++rep) {
    mfg::omo::OmoIterate it;
    it.d = mfg::FlowTable(T, S, A);
    for (int t = 0; t <= T; ++t) {
      double sum = 0.0;
      for (double& v : it.d.slice(t)) {
        v = 0.05 + unif(rng);
        sum += v;
      }
      for (double& v : it.d.slice(t)) v /= sum;
    }
    it.y.resize(static_cast<size_t>(S) * (T + 1));
    for (double& v : it.y) v = 0.5 * wide(rng);
    it.z.resize(static_cast<size_t>(SA) * (T + 1));
    for (double& v : it.z) v = 0.25 * (wide(rng) + 2.0);
    mfg::omo::Weights w{0.5, 0.5, 1.0, 0.1};

    auto g = mfg::omo::gradient(env.spec, it, w);
    if (corrupt) g.d[0] += 0.5;
    auto f_d = [&](std::span<const double> x) {
      auto v = it;
      std::copy(x.begin(), x.end(), v.d.mass.begin());
      return mfg::omo::objective(env.spec, v, w);
    };
    auto fd = mfg::oracle::fd_gradient(f_d, it.d.mass, 1e-5);
    double worst = 0.0;
    for (size_t i = 0; i < fd.size(); ++i) {
      const double denom = std::max(std::abs(fd[i]), 1e-8);
      worst = std::max(worst, std::abs(g.d[i] - fd[i]) / denom);
    }
    reports.push_back(mfg::oracle::OracleReport::make(
        "gradient_fd_point_" + std::to_string(rep), worst, 0.0, 1e-5));
  }

  // Projections vs the small-dimension QP oracle.
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(5);
    for (double& v : x) v = wide(rng);
    auto ps = x;
    mfg::omo::project_simplex(ps);
    auto qs = mfg::oracle::qp_projection(x, mfg::oracle::ConstraintSet::kSimplex, 1.0);
    double err = 0.0;
    for (size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(ps[i] - qs[i]));
    auto pz = mfg::omo::project_z(x, 1.5);
    auto qz = mfg::oracle::qp_projection(x, mfg::oracle::ConstraintSet::kBudgetCone, 1.5);
    for (size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(pz[i] - qz[i]));
    auto py = mfg::omo::project_y(x, 1.0);
    auto qy = mfg::oracle::qp_projection(x, mfg::oracle::ConstraintSet::kBall, 1.0);
    for (size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(py[i] - qy[i]));
    reports.push_back(mfg::oracle::OracleReport::make(
        "projection_qp_point_" + std::to_string(rep), err, 0.0, 1e-8));
  }

  // Brute-force exploitability vs dynamic programming on the preset game
  // (only when the instance is small enough for enumeration).
  if (SA * (T + 1) <= 12) {
    for (int rep = 0; rep < 5; ++rep) {
      mfg::Policy pi(T, S, A);
      for (int t = 0; t <= T; ++t) {
        for (int s = 0; s < S; ++s) {
          double sum = 0.0;
          for (int a = 0; a < A; ++a) {
            pi.at(t, s, a) = 0.05 + unif(rng);
            sum += pi.at(t, s, a);
          }
          for (int a = 0; a < A; ++a) pi.at(t, s, a) /= sum;
        }
      }
      const double brute = mfg::oracle::brute_exploitability(env.spec, pi);
      const double dp = mfg::exploitability(env.spec, pi);
      reports.push_back(mfg::oracle::OracleReport::make(
          "exploitability_brute_" + std::to_string(rep), dp, brute, 1e-10));
    }
  }

  // Winner conservation and closed-form metrics vs Monte Carlo.
  auto idx = mfg::auction::ScoreIndex::build(env.preset.grid);
  std::vector<double> l(SA);
  double lsum = 0.0;
  for (double& v : l) {
    v = unif(rng);
    lsum += v;
  }
  for (double& v : l) v /= lsum;
  double conservation = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      auto wp = mfg::auction::win_probabilities(env.preset.grid, idx, s, a, l);
      conservation += l[s * A + a] * (wp.solo + wp.tie);
    }
  }
  reports.push_back(mfg::oracle::OracleReport::make(
      "winner_conservation", conservation * env.preset.grid.density, 1.0, 1e-8));

  const long mc_samples = cfg.get_int("mc_samples", 200000);
  auto mc = mfg::oracle::mc_auction_stats(env.preset.grid, l, mc_samples, seed + 1);
  double worst_sigma = 0.0;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      auto em = mfg::auction::expected_metrics(env.preset.grid, idx, s, a, l);
      const int i = s * A + a;
      auto sigmas = [](double delta, double se) {
        return se > 0.0 ? std::abs(delta) / se : (delta == 0.0 ? 0.0 : 1e9);
      };
      worst_sigma = std::max(worst_sigma, sigmas(em.ctr - mc.ctr[i], mc.ctr_se[i]));
      worst_sigma = std::max(worst_sigma, sigmas(em.cpc - mc.cpc[i], mc.cpc_se[i]));
      worst_sigma = std::max(worst_sigma, sigmas(em.sale - mc.sale[i], mc.sale_se[i]));
    }
  }
  reports.push_back(mfg::oracle::OracleReport::make(
      "metrics_vs_monte_carlo_sigmas", std::min(worst_sigma, 9.0), 0.0, 3.0));

  mfg::io::CsvWriter csv((dir / "oracle_report.csv").string(),
                         {"name", "metric", "reference", "tolerance", "passed"});
  bool all_pass = true;
  for (const auto& r : reports) {
    csv.write_row({r.name, mfg::io::format_double(r.metric),
                   mfg::io::format_double(r.reference),
                   mfg::io::format_double(r.tolerance), r.passed ? "1" : "0"});
    std::printf("%s %s (metric %.3e, ref %.3e, tol %.1e)\n",
                r.passed ? "PASS" : "FAIL", r.name.c_str(), r.metric, r.reference,
                r.tolerance);
    all_pass = all_pass && r.passed;
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mean-field game balance toolkit"};
  app.require_subcommand(1);

  CommonArgs solve_args, pareto_args, eval_args, heur_args, check_args;
  std::string policy_path;

  auto* solve_cmd = app.add_subcommand("solve", "single penalized solve");
  add_common_flags(solve_cmd, solve_args);
  auto* pareto_cmd = app.add_subcommand("pareto", "lambda sweep over the frontier");
  add_common_flags(pareto_cmd, pareto_args);
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate a policy JSON file");
  add_common_flags(eval_cmd, eval_args);
  eval_cmd->add_option("policy", policy_path, "policy JSON path")->required();
  auto* heur_cmd = app.add_subcommand("heuristic", "percentile-band bidding runs");
  add_common_flags(heur_cmd, heur_args);
  auto* check_cmd = app.add_subcommand("check", "run the oracle suite");
  add_common_flags(check_cmd, check_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args);
    if (pareto_cmd->parsed()) return cmd_pareto(pareto_args);
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args, policy_path);
    if (heur_cmd->parsed()) return cmd_heuristic(heur_args);
    if (check_cmd->parsed()) return cmd_check(check_args);
  } catch (const mfg::io::SchemaError& e) {
    std::fprintf(stderr, "config/schema error: %s\n", e.what());
    return kExitConfig;
  } catch (const mfg::GameError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
