#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfg/auction.hpp"
#include "mfg/game.hpp"

// Independent test oracles: Monte Carlo auction statistics, finite-difference
// gradients, brute-force exploitability on tiny games, and small-dimension
// projection QPs. None of these import solver internals; they share only the
// domain types.
namespace mfg::oracle {

struct OracleReport {
  std::string name;
  double metric = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool passed = false;

  static OracleReport make(std::string name, double metric, double reference,
                           double tolerance) {
    OracleReport r{std::move(name), metric, reference, tolerance, false};
    r.passed = std::abs(metric - reference) <= tolerance;
    return r;
  }
};

// Monte Carlo estimates of (win prob, CTR, CPC, SALE) for every grid pair,
// against n-1 opponents sampled from the flow slice, with standard errors.
struct McAuctionStats {
  long samples = 0;
  // All flat (s*A + a) indexed.
  std::vector<double> win, win_se;
  std::vector<double> ctr, ctr_se;
  std::vector<double> cpc, cpc_se;
  std::vector<double> sale, sale_se;
};
McAuctionStats mc_auction_stats(const auction::AuctionGrid& grid,
                                std::span<const double> flow_slice, long samples,
                                std::uint64_t seed);

// Central finite differences per coordinate. Non-finite evaluations surface
// as NaN entries.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> point, double step);

// Exact exploitability by enumeration of all deterministic Markov policies
// (a deterministic optimal best response exists for a fixed flow). Requires
// S*A*(T+1) <= 12 and at most 4096 deterministic policies.
double brute_exploitability(const GameSpec& spec, const Policy& policy);

// Euclidean projection by enumeration over active sets; dimension <= 6.
enum class ConstraintSet { kSimplex, kBudgetCone, kBall };
std::vector<double> qp_projection(std::span<const double> point, ConstraintSet set,
                                  double bound);

}  // namespace mfg::oracle
