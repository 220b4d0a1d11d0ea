#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfg/auction.hpp"
#include "mfg/omo.hpp"
#include "mfg/oracle.hpp"
#include "test_games.hpp"

using namespace mfg;
using namespace mfg::omo;
using testing::random_policy;
using testing::smooth_coupled_game;

namespace {

// Straight double-loop recomputation of the consistency residual, kept
// independent of the library implementation.
double oracle_consistency(const GameSpec& spec, const FlowTable& d) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    double m = 0.0;
    for (int a = 0; a < A; ++a) m += d.at(0, s, a);
    total += (m - spec.initial_dist[s]) * (m - spec.initial_dist[s]);
  }
  std::vector<double> probs(S);
  for (int t = 0; t + 1 <= T; ++t) {
    for (int sp = 0; sp < S; ++sp) {
      double next = 0.0;
      for (int a = 0; a < A; ++a) next += d.at(t + 1, sp, a);
      double pushed = 0.0;
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          spec.transition(t, s, a, d.slice(t), probs);
          pushed += d.at(t, s, a) * probs[sp];
        }
      }
      total += (next - pushed) * (next - pushed);
    }
  }
  return total;
}

double oracle_best_response(const GameSpec& spec, std::span<const double> y,
                            std::span<const double> z, const FlowTable& d) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  std::vector<double> probs(S);
  auto yv = [&](int t, int s) { return y[t * S + s]; };
  auto zv = [&](int t, int s, int a) { return z[(t * S + s) * A + a]; };
  double total = 0.0;
  if (T >= 1) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double r = spec.reward(T, s, a, d.slice(T));
        const double e = yv(T - 1, s) - r - zv(T, s, a);
        total += e * e;
      }
    }
    for (int t = 0; t + 2 <= T; ++t) {
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          spec.transition(t + 1, s, a, d.slice(t + 1), probs);
          double push = 0.0;
          for (int sp = 0; sp < S; ++sp) push += probs[sp] * yv(t + 1, sp);
          const double r = spec.reward(t + 1, s, a, d.slice(t + 1));
          const double e = yv(t, s) - r - push - zv(t + 1, s, a);
          total += e * e;
        }
      }
    }
  }
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      spec.transition(0, s, a, d.slice(0), probs);
      double push = 0.0;
      for (int sp = 0; sp < S; ++sp) push += probs[sp] * yv(0, sp);
      const double r = spec.reward(0, s, a, d.slice(0));
      const double e = yv(T, s) + r + push + zv(0, s, a);
      total += e * e;
    }
  }
  return total;
}

OmoIterate random_iterate(const GameSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  OmoIterate it;
  it.d = FlowTable(T, S, A);
  for (int t = 0; t <= T; ++t) {
    double sum = 0.0;
    for (int i = 0; i < S * A; ++i) {
      it.d.slice(t)[i] = 0.05 + unif(rng);
      sum += it.d.slice(t)[i];
    }
    for (int i = 0; i < S * A; ++i) it.d.slice(t)[i] /= sum;
  }
  it.y.resize(static_cast<size_t>(S) * (T + 1));
  for (double& v : it.y) v = unif(rng) - 0.5;
  it.z.resize(static_cast<size_t>(S) * A * (T + 1));
  for (double& v : it.z) v = 0.5 * unif(rng);
  return it;
}

GameSpec sec3_spec(int horizon = 0) {
  auto p = auction::preset("paper-sec3");
  return auction::build_game_spec(p.grid, p.welfare, horizon);
}

}  // namespace

TEST_CASE("consistency residual: propagated flows have zero residual") {
  auto spec = smooth_coupled_game(3, 2, 3, 4);
  auto flow = propagate_flow(spec, random_policy(3, 3, 2, 9));
  CHECK(consistency_residual(spec, flow) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("consistency residual: hand value 0.08 on the uniform mismatch") {
  // Identity kernel, S=2, A=1, mu0 = (0.3, 0.7), every slice uniform (0.5, 0.5):
  // only the initial marginal mismatch contributes, 0.2^2 + 0.2^2 = 0.08.
  GameSpec spec;
  spec.num_states = 2;
  spec.num_actions = 1;
  spec.horizon = 1;
  spec.initial_dist = {0.3, 0.7};
  spec.reward_bound = 1.0;
  spec.transition = [](int, int s, int, std::span<const double>, std::span<double> out) {
    out[s] = 1.0;
    out[1 - s] = 0.0;
  };
  spec.reward = [](int, int, int, std::span<const double>) { return 0.0; };
  FlowTable d(1, 2, 1);
  for (double& m : d.mass) m = 0.5;
  CHECK(consistency_residual(spec, d) == doctest::Approx(0.08));
}

TEST_CASE("consistency residual matches the double-loop oracle") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto spec = smooth_coupled_game(3, 2, 3, seed + 50);
    auto it = random_iterate(spec, seed);
    CHECK(consistency_residual(spec, it.d) ==
          doctest::Approx(oracle_consistency(spec, it.d)).epsilon(1e-12));
  }
}

TEST_CASE("best-response residual matches the oracle, horizons 0 to 3") {
  for (int T : {0, 1, 2, 3}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto spec = smooth_coupled_game(2, 2, T, seed + 70);
      auto it = random_iterate(spec, seed + 7);
      CHECK(best_response_residual(spec, it.y, it.z, it.d) ==
            doctest::Approx(oracle_best_response(spec, it.y, it.z, it.d))
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("best-response residual vanishes at the optimal-value certificate") {
  // Horizon 0, one state, one action, identity kernel, reward r: at T = 0 the
  // end-block and start-block components of y coincide, so the residual is
  // (2y + r + z)^2, zero at y = -r/2, z = 0.
  GameSpec spec;
  spec.num_states = 1;
  spec.num_actions = 1;
  spec.horizon = 0;
  spec.initial_dist = {1.0};
  spec.reward_bound = 1.0;
  spec.transition = [](int, int, int, std::span<const double>, std::span<double> out) {
    out[0] = 1.0;
  };
  spec.reward = [](int, int, int, std::span<const double>) { return 0.8; };
  FlowTable d(0, 1, 1);
  d.at(0, 0, 0) = 1.0;
  std::vector<double> y = {-0.4}, z = {0.0};
  CHECK(best_response_residual(spec, y, z, d) == doctest::Approx(0.0));
  y[0] = 0.0;
  CHECK(best_response_residual(spec, y, z, d) == doctest::Approx(0.64));
}

TEST_CASE("objective composes the four terms") {
  auto spec = sec3_spec();
  auto it = random_iterate(spec, 12);
  Weights w{0.7, 0.3, 1.0, 0.1};
  auto sv = social_value(spec, it.d);
  double comp = 0.0;
  for (size_t i = 0; i < it.z.size(); ++i) comp += it.z[i] * it.d.mass[i];
  const double expect = -0.7 * sv.welfare + 0.3 * comp +
                        1.0 * consistency_residual(spec, it.d) +
                        0.1 * best_response_residual(spec, it.y, it.z, it.d);
  CHECK(objective(spec, it, w) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("weights validation") {
  const Weights ne{0.0, 1.0, 1.0, 0.1};
  const Weights mfc{1.0, 0.0, 1.0, 0.0};
  const Weights negative{-0.1, 1.0, 1.0, 0.1};
  const Weights all_zero{0.0, 0.0, 0.0, 0.0};
  CHECK_NOTHROW(ne.validate());
  CHECK_NOTHROW(mfc.validate());
  CHECK_THROWS_AS(negative.validate(), GameError);
  CHECK_THROWS_AS(all_zero.validate(), GameError);
}

TEST_CASE("gradient matches finite differences on a coupled game") {
  auto spec = smooth_coupled_game(2, 2, 2, 31);
  auto it = random_iterate(spec, 13);
  Weights w{0.6, 0.4, 1.0, 0.1};
  auto g = gradient(spec, it, w);

  auto pack = [&](const OmoIterate& v) {
    std::vector<double> x;
    x.insert(x.end(), v.y.begin(), v.y.end());
    x.insert(x.end(), v.z.begin(), v.z.end());
    x.insert(x.end(), v.d.mass.begin(), v.d.mass.end());
    return x;
  };
  auto unpack = [&](std::span<const double> x) {
    OmoIterate v = it;
    size_t k = 0;
    for (double& e : v.y) e = x[k++];
    for (double& e : v.z) e = x[k++];
    for (double& e : v.d.mass) e = x[k++];
    return v;
  };
  auto f = [&](std::span<const double> x) { return objective(spec, unpack(x), w); };
  auto x0 = pack(it);
  auto fd = oracle::fd_gradient(f, x0, 1e-6);

  std::vector<double> an;
  an.insert(an.end(), g.y.begin(), g.y.end());
  an.insert(an.end(), g.z.begin(), g.z.end());
  an.insert(an.end(), g.d.begin(), g.d.end());
  REQUIRE(an.size() == fd.size());
  for (size_t i = 0; i < fd.size(); ++i)
    CHECK(an[i] == doctest::Approx(fd[i]).epsilon(5e-6));
}

TEST_CASE("gradient matches finite differences on the auction game") {
  auto spec = sec3_spec();
  auto it = random_iterate(spec, 21);
  Weights w{0.5, 0.5, 1.0, 0.1};
  auto g = gradient(spec, it, w);

  auto f_d = [&](std::span<const double> x) {
    OmoIterate v = it;
    std::copy(x.begin(), x.end(), v.d.mass.begin());
    return objective(spec, v, w);
  };
  auto fd_d = oracle::fd_gradient(f_d, it.d.mass, 1e-6);
  for (size_t i = 0; i < fd_d.size(); ++i)
    CHECK(g.d[i] == doctest::Approx(fd_d[i]).epsilon(5e-6));

  auto f_y = [&](std::span<const double> x) {
    OmoIterate v = it;
    std::copy(x.begin(), x.end(), v.y.begin());
    return objective(spec, v, w);
  };
  auto fd_y = oracle::fd_gradient(f_y, it.y, 1e-6);
  for (size_t i = 0; i < fd_y.size(); ++i)
    CHECK(g.y[i] == doctest::Approx(fd_y[i]).epsilon(5e-6));

  auto f_z = [&](std::span<const double> x) {
    OmoIterate v = it;
    std::copy(x.begin(), x.end(), v.z.begin());
    return objective(spec, v, w);
  };
  auto fd_z = oracle::fd_gradient(f_z, it.z, 1e-6);
  for (size_t i = 0; i < fd_z.size(); ++i)
    CHECK(g.z[i] == doctest::Approx(fd_z[i]).epsilon(5e-6));
}

TEST_CASE("gradient refuses non-smooth environments") {
  auto spec = sec3_spec();
  spec.smooth = false;
  auto it = random_iterate(spec, 2);
  CHECK_THROWS_AS(gradient(spec, it, Weights{}), GameError);
}

TEST_CASE("simplex projection: frozen examples and the QP oracle") {
  std::vector<double> a = {2.0, 0.0};
  project_simplex(a);
  CHECK(a[0] == doctest::Approx(1.0));
  CHECK(a[1] == doctest::Approx(0.0));

  std::vector<double> b = {0.5, 0.5, 0.5};
  project_simplex(b);
  for (double v : b) CHECK(v == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x(5);
    for (double& v : x) v = unif(rng);
    auto expect = oracle::qp_projection(x, oracle::ConstraintSet::kSimplex, 1.0);
    auto got = x;
    project_simplex(got);
    double sum = 0.0;
    for (size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-9));
      CHECK(got[i] >= -1e-12);
      sum += got[i];
    }
    CHECK(sum == doctest::Approx(1.0));
    auto twice = got;
    project_simplex(twice);
    for (size_t i = 0; i < got.size(); ++i)
      CHECK(twice[i] == doctest::Approx(got[i]).epsilon(1e-12));
  }
}

TEST_CASE("budget-cone projection: clipping, budget facet, QP oracle") {
  // Inside after clipping: stays put.
  std::vector<double> in = {0.2, -0.3, 0.1};
  auto p1 = project_z(in, 10.0);
  CHECK(p1[0] == doctest::Approx(0.2));
  CHECK(p1[1] == doctest::Approx(0.0));
  CHECK(p1[2] == doctest::Approx(0.1));

  // Over budget: lands on the budget facet.
  std::vector<double> out = {3.0, 2.0, 1.0};
  auto p2 = project_z(out, 3.0);
  double sum = 0.0;
  for (double v : p2) {
    CHECK(v >= -1e-12);
    sum += v;
  }
  CHECK(sum == doctest::Approx(3.0));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-2.0, 3.0);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<double> x(4);
    for (double& v : x) v = unif(rng);
    const double budget = 2.0;
    auto expect = oracle::qp_projection(x, oracle::ConstraintSet::kBudgetCone, budget);
    auto got = project_z(x, budget);
    for (size_t i = 0; i < got.size(); ++i)
      CHECK(got[i] == doctest::Approx(expect[i]).epsilon(1e-8));
  }
}

TEST_CASE("ball projection scales radially") {
  std::vector<double> x = {3.0, 4.0};
  auto p = project_y(x, 1.0);
  CHECK(p[0] == doctest::Approx(0.6));
  CHECK(p[1] == doctest::Approx(0.8));
  auto same = project_y(p, 1.0);
  CHECK(same[0] == doctest::Approx(0.6));
  std::vector<double> inside = {0.1, -0.2};
  auto q = project_y(inside, 1.0);
  CHECK(q[0] == doctest::Approx(0.1));
  CHECK(q[1] == doctest::Approx(-0.2));
}

TEST_CASE("feasible-set bounds use the documented closed forms") {
  auto spec = sec3_spec(2);  // T = 2
  const double r = spec.reward_bound;
  const int S = 3, A = 5, T = 2;
  CHECK(z_budget(spec) == doctest::Approx(S * A * (T * T + T + 2) * r));
  CHECK(y_radius(spec) == doctest::Approx(S * (T + 1) * (T + 2) * r / 2.0));
}

TEST_CASE("solver: trivial game reaches a consistent near-feasible point") {
  auto p = auction::preset("toy-1x1");
  auto spec = auction::build_game_spec(p.grid, p.welfare, 0);
  SolverConfig cfg;
  cfg.max_iters = 200;
  auto res = solve(spec, Weights{0.5, 0.5, 1.0, 0.1}, cfg);
  CHECK(res.status != SolveStatus::kNonFinite);
  CHECK(consistency_residual(spec, res.iterate.d) <= 1e-8);
  CHECK(res.iterate.d.at(0, 0, 0) == doctest::Approx(1.0));
}

TEST_CASE("solver: objective trace is non-increasing") {
  auto spec = sec3_spec();
  SolverConfig cfg;
  cfg.max_iters = 60;
  auto res = solve(spec, Weights{0.5, 0.5, 1.0, 0.1}, cfg);
  REQUIRE(res.trace.size() >= 2);
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].objective <= res.trace[i - 1].objective + 1e-12);
}

TEST_CASE("solver is deterministic for a fixed seed and config") {
  auto spec = sec3_spec();
  SolverConfig cfg;
  cfg.max_iters = 40;
  cfg.seed = 5;
  cfg.init_mode = InitMode::kRandom;
  auto a = solve(spec, Weights{0.3, 0.7, 1.0, 0.1}, cfg);
  auto b = solve(spec, Weights{0.3, 0.7, 1.0, 0.1}, cfg);
  CHECK(a.iterations == b.iterations);
  for (size_t i = 0; i < a.iterate.d.mass.size(); ++i)
    CHECK(a.iterate.d.mass[i] == b.iterate.d.mass[i]);
}

TEST_CASE("solver aborts with a non-finite status when the link blows up") {
  auto p = auction::preset("paper-sec3");
  auto spec = auction::build_game_spec(p.grid, p.welfare, 0);
  spec.link = [](std::span<const double>) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  spec.link_grad = [](std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
  SolverConfig cfg;
  cfg.max_iters = 10;
  auto res = solve(spec, Weights{1.0, 0.0, 1.0, 0.1}, cfg);
  CHECK(res.status == SolveStatus::kNonFinite);
}

TEST_CASE("gradient y-block only sees the best-response penalty") {
  auto spec = sec3_spec(1);
  auto it = random_iterate(spec, 3);
  auto a = gradient(spec, it, Weights{0.9, 0.1, 1.0, 0.1});
  auto b = gradient(spec, it, Weights{0.0, 0.0, 1.0, 0.1});
  for (size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);
}

TEST_CASE("pure cooperation on a decoupled game recovers the optimal value") {
  // lambda2 = 0, rho2 = 0: maximize welfare over near-consistent flows. In a
  // decoupled game with metric = reward and identity link the optimum is the
  // backward-induction value of the best response.
  auto spec = testing::random_decoupled_game(2, 2, 1, 123);
  auto br = best_response(spec, propagate_flow(spec, Policy::uniform(1, 2, 2)));
  double target = 0.0;
  for (int s = 0; s < 2; ++s) target += spec.initial_dist[s] * br.values[s];

  SolverConfig cfg;
  cfg.max_iters = 4000;
  cfg.step_size = 0.05;
  auto res = solve(spec, Weights{1.0, 0.0, 5.0, 0.0}, cfg);
  CHECK(res.status != SolveStatus::kNonFinite);
  // Evaluate welfare on the consistent flow of the retrieved policy.
  auto flow = propagate_flow(spec, retrieve_policy(res.iterate.d));
  CHECK(social_value(spec, flow).welfare == doctest::Approx(target).epsilon(1e-4));
}

TEST_CASE("complementarity report certifies the exploitability bound") {
  auto spec = sec3_spec();
  SolverConfig cfg;
  cfg.max_iters = 800;
  cfg.step_size = 0.05;
  auto res = solve(spec, Weights{0.0, 1.0, 1.0, 0.1}, cfg);
  auto rep = complementarity_check(res.iterate, spec);
  CHECK(rep.comp >= 0.0);
  CHECK(rep.slack >= 0.0);
  CHECK(rep.bound_satisfied);
}
