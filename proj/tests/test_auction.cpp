#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mfg/auction.hpp"
#include "mfg/game.hpp"
#include "mfg/oracle.hpp"

using namespace mfg;
using namespace mfg::auction;

namespace {

// Two CTR states and one bid, producing scores 0.5 and 1.0. The high pair is
// (s=0.5 ctr, bid=2): sale value v=2 gives the hand-checkable metrics below.
AuctionGrid two_score_grid(int density) {
  AuctionGrid g;
  g.ctr_values = {0.25, 0.5};
  g.bid_values = {2.0};
  g.density = density;
  g.utility = 2.0;
  g.state_dist = {0.5, 0.5};
  return g;
}

std::vector<double> random_flow_slice(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  std::vector<double> l(n);
  double sum = 0.0;
  for (double& x : l) { x = unif(rng); sum += x; }
  for (double& x : l) x /= sum;
  return l;
}

}  // namespace

TEST_CASE("score index merges colliding bid*ctr products") {
  auto p = preset("paper-sec3");
  auto idx = ScoreIndex::build(p.grid);
  // 0.2*2.5 == 0.4*1.25 == 0.5 must land on one rank; zero bids collide too.
  CHECK(idx.rank_of(0, 2, 5) == idx.rank_of(1, 1, 5));
  CHECK(idx.rank_of(0, 0, 5) == idx.rank_of(2, 0, 5));
  // 0.2*5 == 0.4*2.5 == 0.6*(5/3): not on the grid, but 1.0 has two sources.
  CHECK(idx.rank_of(0, 4, 5) == idx.rank_of(1, 2, 5));
  for (size_t i = 1; i < idx.scores.size(); ++i)
    CHECK(idx.scores[i] > idx.scores[i - 1]);
  // Every pair maps to the rank holding its exact score.
  for (int s = 0; s < p.grid.num_states(); ++s)
    for (int a = 0; a < p.grid.num_actions(); ++a)
      CHECK(idx.scores[idx.rank_of(s, a, 5)] ==
            doctest::Approx(p.grid.ctr_values[s] * p.grid.bid_values[a]).epsilon(1e-12));
}

TEST_CASE("score distribution aggregates colliding pairs and cumulates below") {
  auto grid = two_score_grid(2);
  auto idx = ScoreIndex::build(grid);
  std::vector<double> l = {0.3, 0.7};
  auto sd = score_distribution(grid, idx, l);
  REQUIRE(sd.pmf.size() == 2);
  CHECK(sd.pmf[0] == doctest::Approx(0.3));
  CHECK(sd.pmf[1] == doctest::Approx(0.7));
  CHECK(sd.cum_below[0] == doctest::Approx(0.0));
  CHECK(sd.cum_below[1] == doctest::Approx(0.3));
}

TEST_CASE("win probabilities: two scores, two bidders") {
  auto grid = two_score_grid(2);
  auto idx = ScoreIndex::build(grid);
  std::vector<double> l = {0.5, 0.5};
  auto high = win_probabilities(grid, idx, 1, 0, l);
  CHECK(high.solo == doctest::Approx(0.5));
  CHECK(high.tie == doctest::Approx(0.25));
  auto low = win_probabilities(grid, idx, 0, 0, l);
  CHECK(low.solo == doctest::Approx(0.0));
  CHECK(low.tie == doctest::Approx(0.25));
}

TEST_CASE("expected metrics: hand values for the two-score case") {
  auto grid = two_score_grid(2);
  auto idx = ScoreIndex::build(grid);
  std::vector<double> l = {0.5, 0.5};
  auto m = expected_metrics(grid, idx, 1, 0, l);
  CHECK(m.ctr == doctest::Approx(0.375));
  CHECK(m.sale == doctest::Approx(0.75));
  CHECK(m.cpc == doctest::Approx(0.5));
  CHECK(bidder_reward(grid, idx, 1, 0, l) == doctest::Approx(0.25));
}

TEST_CASE("win probabilities against the Monte Carlo oracle") {
  auto p = preset("paper-sec3");
  auto idx = ScoreIndex::build(p.grid);
  auto l = random_flow_slice(p.grid.num_states() * p.grid.num_actions(), 3);
  auto mc = oracle::mc_auction_stats(p.grid, l, 200000, 99);
  const int A = p.grid.num_actions();
  for (int s = 0; s < p.grid.num_states(); ++s) {
    for (int a = 0; a < A; ++a) {
      auto wp = win_probabilities(p.grid, idx, s, a, l);
      auto em = expected_metrics(p.grid, idx, s, a, l);
      const int i = s * A + a;
      CHECK(std::abs(wp.solo + wp.tie - mc.win[i]) <= 4.0 * mc.win_se[i] + 1e-9);
      CHECK(std::abs(em.ctr - mc.ctr[i]) <= 4.0 * mc.ctr_se[i] + 1e-9);
      CHECK(std::abs(em.cpc - mc.cpc[i]) <= 4.0 * mc.cpc_se[i] + 1e-9);
      CHECK(std::abs(em.sale - mc.sale[i]) <= 4.0 * mc.sale_se[i] + 1e-9);
    }
  }
}

TEST_CASE("winner conservation: density * sum_pairs L (P1+P2) equals one") {
  for (auto name : {"paper-sec3"}) {
    auto p = preset(name);
    auto idx = ScoreIndex::build(p.grid);
    const int A = p.grid.num_actions();
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto l = random_flow_slice(p.grid.num_states() * A, seed + 10);
      double total = 0.0;
      for (int s = 0; s < p.grid.num_states(); ++s) {
        for (int a = 0; a < A; ++a) {
          auto wp = win_probabilities(p.grid, idx, s, a, l);
          total += l[s * A + a] * (wp.solo + wp.tie);
        }
      }
      CHECK(total * p.grid.density == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("win probability is monotone in the bid") {
  auto p = preset("paper-sec3");
  auto idx = ScoreIndex::build(p.grid);
  auto l = random_flow_slice(15, 77);
  for (int s = 0; s < 3; ++s) {
    double prev = -1.0;
    for (int a = 0; a < 5; ++a) {
      auto wp = win_probabilities(p.grid, idx, s, a, l);
      CHECK(wp.solo + wp.tie >= prev - 1e-12);
      CHECK(wp.solo >= -1e-15);
      CHECK(wp.solo + wp.tie <= 1.0 + 1e-12);
      prev = wp.solo + wp.tie;
    }
  }
}

TEST_CASE("rewards respect the declared bound") {
  auto p = preset("paper-sec3");
  auto idx = ScoreIndex::build(p.grid);
  const double bound = p.grid.reward_bound();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto l = random_flow_slice(15, seed + 40);
    for (int s = 0; s < 3; ++s)
      for (int a = 0; a < 5; ++a)
        CHECK(std::abs(bidder_reward(p.grid, idx, s, a, l)) <= bound + 1e-12);
  }
}

TEST_CASE("welfare link: frozen scalar value and limiting identities") {
  WelfareParams w;  // c = 1/3 each, eps = 1e-5
  const double got = welfare_link(w, 0.3, 0.6, 1.0);
  // Independent recomputation of the same composite.
  const double ref = (std::log(0.3 + 1e-5) + std::log(0.6 / (0.3 + 1e-5) + 1e-5) +
                      std::log(0.3 + 1e-5)) / 3.0;
  CHECK(got == doctest::Approx(ref).epsilon(1e-12));
  CHECK(got == doctest::Approx(-0.5716).epsilon(2e-3));

  // Scaling V2 by e multiplies only the middle log term: F shifts by c2.
  const double shifted = welfare_link(w, 0.3, 0.6 * std::exp(1.0), 1.0);
  CHECK(shifted - got == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("welfare link rejects non-finite compositions") {
  WelfareParams w;
  w.eps1 = 0.0;
  w.eps3 = 0.0;
  CHECK_THROWS_AS(welfare_link(w, 0.0, 0.5, 1.0), EvaluatorDomainError);
}

TEST_CASE("metric gradients match central differences") {
  auto grid = two_score_grid(3);
  auto idx = ScoreIndex::build(grid);
  auto l = random_flow_slice(2, 5);
  for (int s = 0; s < 2; ++s) {
    auto grads = expected_metric_grads(grid, idx, s, 0, l);
    for (int which = 0; which < 3; ++which) {
      auto f = [&](std::span<const double> x) {
        auto m = expected_metrics(grid, idx, s, 0, x);
        return which == 0 ? m.ctr : which == 1 ? m.cpc : m.sale;
      };
      auto fd = oracle::fd_gradient(f, l, 1e-6);
      const auto& an = which == 0 ? grads.ctr : which == 1 ? grads.cpc : grads.sale;
      for (size_t i = 0; i < fd.size(); ++i)
        CHECK(an[i] == doctest::Approx(fd[i]).epsilon(1e-6));
    }
  }
}

TEST_CASE("metric gradients on the sec3 preset, including collisions") {
  auto p = preset("paper-sec3");
  auto idx = ScoreIndex::build(p.grid);
  auto l = random_flow_slice(15, 9);
  for (int s : {0, 2}) {
    for (int a : {0, 2, 4}) {
      auto grads = expected_metric_grads(p.grid, idx, s, a, l);
      auto f_sale = [&](std::span<const double> x) {
        return expected_metrics(p.grid, idx, s, a, x).sale;
      };
      auto f_cpc = [&](std::span<const double> x) {
        return expected_metrics(p.grid, idx, s, a, x).cpc;
      };
      auto fd_sale = oracle::fd_gradient(f_sale, l, 1e-6);
      auto fd_cpc = oracle::fd_gradient(f_cpc, l, 1e-6);
      for (size_t i = 0; i < fd_sale.size(); ++i) {
        CHECK(grads.sale[i] == doctest::Approx(fd_sale[i]).epsilon(1e-5));
        CHECK(grads.cpc[i] == doctest::Approx(fd_cpc[i]).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("game spec assembly: identity flow and metric aggregation") {
  auto p = preset("paper-sec3");
  auto spec = build_game_spec(p.grid, p.welfare, 0);
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.num_states == 3);
  CHECK(spec.num_actions == 5);
  CHECK(spec.num_metrics == 3);

  auto pi = Policy::uniform(0, 3, 5);
  auto flow = propagate_flow(spec, pi);
  // Identity kernel: slice is mu0 spread uniformly over actions.
  for (int s = 0; s < 3; ++s)
    for (int a = 0; a < 5; ++a)
      CHECK(flow.at(0, s, a) == doctest::Approx(1.0 / 15.0));

  // Social metrics equal the mass-weighted expected metrics.
  auto idx = ScoreIndex::build(p.grid);
  double v[3] = {0.0, 0.0, 0.0};
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 5; ++a) {
      auto m = expected_metrics(p.grid, idx, s, a, flow.slice(0));
      v[0] += flow.at(0, s, a) * m.ctr;
      v[1] += flow.at(0, s, a) * m.sale;
      v[2] += flow.at(0, s, a) * m.cpc;
    }
  }
  auto sv = social_value(spec, flow);
  for (int k = 0; k < 3; ++k) CHECK(sv.metrics[k] == doctest::Approx(v[k]));
  CHECK(sv.welfare == doctest::Approx(welfare_link(p.welfare, v[0], v[1], v[2])));
}

TEST_CASE("presets validate and the large grid state distribution normalizes") {
  for (const auto& name : preset_names()) {
    auto p = preset(name);
    CHECK_NOTHROW(p.grid.validate());
    CHECK_NOTHROW(p.welfare.validate());
    double sum = 0.0;
    for (double x : p.grid.state_dist) {
      CHECK(x > 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
  auto big = preset("paper-appB");
  CHECK(big.grid.num_states() == 20);
  CHECK(big.grid.num_actions() == 20);
  CHECK(big.grid.density == 30);
  CHECK_THROWS_AS(preset("no-such-preset"), GameError);
}

TEST_CASE("truncated normal discretization is density-proportional") {
  std::vector<double> grid = {0.0, 1.0, 2.0};
  auto w = discretize_truncated_normal(grid, 1.0, 1.0);
  CHECK(w[0] == doctest::Approx(w[2]));
  CHECK(w[1] > w[0]);
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  CHECK(w[1] / w[0] == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
}
