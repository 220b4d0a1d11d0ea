#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfg/game.hpp"

// Pay-per-click second-price auction environment: score algebra, win
// probabilities, expected CTR/CPC/SALE, bidder reward, market-average social
// metrics, and the log-composite welfare function.
namespace mfg::auction {

// State/action grids of the bidders' mean-field game. States are CTR values,
// actions are bids, and a score is bid * CTR.
struct AuctionGrid {
  std::vector<double> ctr_values;  // strictly increasing, in (0,1]
  std::vector<double> bid_values;  // non-decreasing, non-negative
  int density = 2;                 // n, bidders per auction (>= 2)
  double utility = 1.0;            // v, sale value per click
  std::vector<double> state_dist;  // mu over ctr_values

  int num_states() const { return static_cast<int>(ctr_values.size()); }
  int num_actions() const { return static_cast<int>(bid_values.size()); }

  void validate() const;
  // max over the grid of max(v*s, s*a); SALE <= v*s and CPC <= max score.
  double reward_bound() const;
};

// Deduplicated, sorted score set with the (s,a) -> rank collision structure.
// Scores are rounded to 12 decimal digits before deduplication so that equal
// products land on one rank.
struct ScoreIndex {
  std::vector<double> scores;             // strictly increasing
  std::vector<int> pair_to_rank;          // flat index s*A + a -> rank
  std::vector<std::vector<int>> rank_to_pairs;  // rank -> colliding flat pairs

  int num_ranks() const { return static_cast<int>(scores.size()); }
  int rank_of(int s, int a, int num_actions) const {
    return pair_to_rank[s * num_actions + a];
  }

  static ScoreIndex build(const AuctionGrid& grid);
};

// Parameters of the log-composite welfare function.
struct WelfareParams {
  double c1 = 1.0 / 3.0, c2 = 1.0 / 3.0, c3 = 1.0 / 3.0;
  double eps0 = 1e-5, eps1 = 1e-5, eps2 = 1e-5, eps3 = 1e-5;

  void validate() const;
};

// Score pmf over ranks and the cumulative "strictly below" mass.
struct ScoreDistribution {
  std::vector<double> pmf;        // lambda(rank)
  std::vector<double> cum_below;  // Lambda(rank) = sum_{j<rank} pmf[j]
};
ScoreDistribution score_distribution(const AuctionGrid& grid,
                                     const ScoreIndex& index,
                                     std::span<const double> flow_slice);

// Solo-win and tie-win probabilities of a representative bidder at (s,a)
// against n-1 opponents drawn from the flow slice.
struct WinProbs {
  double solo = 0.0;  // P1
  double tie = 0.0;   // P2
};
WinProbs win_probabilities(const AuctionGrid& grid, const ScoreIndex& index,
                           int s, int a, std::span<const double> flow_slice);

// Expected CTR, CPC and SALE of the representative bidder at (s,a).
struct ExpectedMetrics {
  double ctr = 0.0;
  double cpc = 0.0;
  double sale = 0.0;
};
ExpectedMetrics expected_metrics(const AuctionGrid& grid, const ScoreIndex& index,
                                 int s, int a, std::span<const double> flow_slice);

// SALE - CPC.
double bidder_reward(const AuctionGrid& grid, const ScoreIndex& index, int s,
                     int a, std::span<const double> flow_slice);

// c1 ln(V1+eps1) + c2 ln(V2/(V1*V3+eps0) + eps2) + c3 ln(V1*V3+eps3).
double welfare_link(const WelfareParams& params, double v1, double v2, double v3);

// Derivatives of expected_metrics with respect to the flow-slice entries;
// each vector has length S*A.
struct MetricGrads {
  std::vector<double> ctr;
  std::vector<double> cpc;
  std::vector<double> sale;
};
MetricGrads expected_metric_grads(const AuctionGrid& grid, const ScoreIndex& index,
                                  int s, int a, std::span<const double> flow_slice);

// Assembles the full GameSpec: identity transition (no state transition),
// mu0 = state_dist, reward = SALE - CPC, three social metrics (CTR, SALE,
// CPC) and the log-composite link. The horizon is configurable; with the
// identity kernel the game decomposes per timestep.
GameSpec build_game_spec(const AuctionGrid& grid, const WelfareParams& params,
                         int horizon = 0);

// Named presets. "paper-sec3": CTR {0.2,0.4,0.6}, bids {0,1.25,2.5,3.75,5},
// n=5, v=2, uniform mu. "paper-appB": 20x20 grid over CTR [0.01,1] x bids
// [0,5], n=30, v=5, mu = truncated N(0.2, 0.3^2) discretized. "toy-1x1":
// a single-state single-action grid for smoke tests.
struct Preset {
  AuctionGrid grid;
  WelfareParams welfare;
};
Preset preset(const std::string& name);
std::vector<std::string> preset_names();

// Discretizes a normal density truncated to the grid values: weights
// proportional to the density at each grid point, normalized.
std::vector<double> discretize_truncated_normal(std::span<const double> grid_values,
                                                double mean, double stddev);

}  // namespace mfg::auction
