#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mfg/auction.hpp"
#include "mfg/omo.hpp"

using namespace mfg;

namespace {

struct Env {
  auction::Preset preset;
  GameSpec spec;
  explicit Env(const std::string& name, int horizon = 0)
      : preset(auction::preset(name)),
        spec(auction::build_game_spec(preset.grid, preset.welfare, horizon)) {}
};

omo::OmoIterate random_iterate(const GameSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  omo::OmoIterate it;
  it.d = FlowTable(spec.horizon, spec.num_states, spec.num_actions);
  for (int t = 0; t <= spec.horizon; ++t) {
    auto slice = it.d.slice(t);
    double sum = 0.0;
    for (double& v : slice) {
      v = unif(rng);
      sum += v;
    }
    for (double& v : slice) v /= sum;
  }
  it.y.assign(static_cast<size_t>(spec.num_states) * (spec.horizon + 1), 0.1);
  it.z.assign(it.d.mass.size(), 0.05);
  return it;
}

Policy uniform_policy(const GameSpec& spec) {
  Policy pi(spec.horizon, spec.num_states, spec.num_actions);
  const double p = 1.0 / spec.num_actions;
  for (double& v : pi.probs) v = p;
  return pi;
}

void BM_PropagateFlow(benchmark::State& state) {
  Env env("paper-appB");
  auto pi = uniform_policy(env.spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagate_flow(env.spec, pi));
  }
}
BENCHMARK(BM_PropagateFlow);

void BM_Exploitability(benchmark::State& state) {
  Env env("paper-sec3");
  auto pi = uniform_policy(env.spec);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exploitability(env.spec, pi));
  }
}
BENCHMARK(BM_Exploitability);

void BM_Objective(benchmark::State& state) {
  Env env("paper-sec3");
  auto it = random_iterate(env.spec, 1);
  omo::Weights w{0.5, 0.5, 1.0, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(omo::objective(env.spec, it, w));
  }
}
BENCHMARK(BM_Objective);

void BM_Gradient(benchmark::State& state) {
  Env env("paper-sec3");
  auto it = random_iterate(env.spec, 2);
  omo::Weights w{0.5, 0.5, 1.0, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(omo::gradient(env.spec, it, w));
  }
}
BENCHMARK(BM_Gradient);

void BM_ProjectSimplex(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> wide(-2.0, 2.0);
  std::vector<double> x(state.range(0));
  for (double& v : x) v = wide(rng);
  std::vector<double> work;
  for (auto _ : state) {
    work = x;
    omo::project_simplex(work);
    benchmark::DoNotOptimize(work.data());
  }
}
BENCHMARK(BM_ProjectSimplex)->Arg(15)->Arg(400);

void BM_SolveIterations(benchmark::State& state) {
  Env env("paper-sec3");
  omo::SolverConfig cfg;
  cfg.step_size = 0.1;
  cfg.max_iters = static_cast<int>(state.range(0));
  omo::Weights w{0.0, 1.0, 1.0, 0.1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(omo::solve(env.spec, w, cfg));
  }
}
BENCHMARK(BM_SolveIterations)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ExpectedMetrics(benchmark::State& state) {
  auto p = auction::preset(state.range(0) == 0 ? "paper-sec3" : "paper-appB");
  auto idx = auction::ScoreIndex::build(p.grid);
  const int S = p.grid.num_states(), A = p.grid.num_actions();
  std::vector<double> l(static_cast<size_t>(S) * A, 1.0 / (S * A));
  for (auto _ : state) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        benchmark::DoNotOptimize(auction::expected_metrics(p.grid, idx, s, a, l));
      }
    }
  }
}
BENCHMARK(BM_ExpectedMetrics)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
