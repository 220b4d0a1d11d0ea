#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mfg/auction.hpp"
#include "mfg/game.hpp"

// Equilibrium-agnostic bidding heuristic: simulate second-price auctions,
// recommend a percentile band of the winning bids, and relax the population
// bid distribution toward the uniform distribution on that band.
namespace mfg::heuristic {

struct HeuristicConfig {
  int kappa = 10;         // auctions simulated per step
  double eta = 0.7;       // relaxation step size, in [0,1]
  int horizon = 1000;     // number of update steps
  double percentile_lo = 25.0;
  double percentile_hi = 75.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Population bid distribution alpha over the bid grid.
struct BidDistribution {
  std::vector<double> probs;

  void validate() const;
};

// One simulated second-price auction. The winner has the highest score
// (bid * ctr), pays the second-highest score divided by her CTR per click;
// ties pick a uniform random winner who pays his placed bid.
struct AuctionOutcome {
  int winner = 0;
  double winning_bid = 0.0;
  double payment_per_click = 0.0;
};
AuctionOutcome simulate_auction(const auction::AuctionGrid& grid,
                                std::span<const double> bids,
                                std::span<const double> ctrs, std::uint64_t seed);

struct StepResult {
  double band_lo = 0.0;
  double band_hi = 0.0;
  BidDistribution alpha_next;
};
// One heuristic update: kappa auctions with bids drawn from alpha_prev and
// CTRs from the grid's state distribution, nearest-rank percentile band of
// the winning bids, and alpha_next = alpha_prev + eta (alpha_bar - alpha_prev)
// where alpha_bar is Uniform[lo,hi] discretized onto the bid grid.
StepResult heuristic_step(const auction::AuctionGrid& grid,
                          const BidDistribution& alpha_prev,
                          const HeuristicConfig& cfg, int t);

struct Trajectory {
  std::vector<BidDistribution> alphas;  // alpha_0 .. alpha_T
  std::vector<double> band_lo;          // per step 1..T
  std::vector<double> band_hi;
};
Trajectory run_heuristic(const auction::AuctionGrid& grid,
                         const BidDistribution& alpha0, const HeuristicConfig& cfg);

// State-independent policy pi_t(a|s) = alpha(a), bridging the heuristic's
// bid distribution to the Policy type for exploitability evaluation.
Policy heuristic_policy(const auction::AuctionGrid& grid,
                        const BidDistribution& alpha, int horizon = 0);

// Uniform[lo,hi] discretized onto the bid grid: each grid bid receives the
// measure of its midpoint cell intersected with [lo,hi], renormalized. A
// degenerate band maps to a point mass at the nearest grid bid.
BidDistribution discretize_uniform_band(std::span<const double> bid_values,
                                        double lo, double hi);

}  // namespace mfg::heuristic
