#include "mfg/heuristic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfg::heuristic {

namespace {

// Counter-based stream: one root seed split per (timestep, auction), so
// changes to kappa or the horizon do not correlate draws across streams.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t x = (state += 0x9e3779b97f4a7c15ULL);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  double uniform() { return (next() >> 11) * 0x1.0p-53; }

  int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

std::uint64_t stream_seed(std::uint64_t root, std::uint64_t t, std::uint64_t i) {
  SplitMix64 mix(root ^ (t * 0xd1342543de82ef95ULL) ^ (i * 0xaf251af3b0f025b5ULL));
  return mix.next();
}

int sample_index(std::span<const double> probs, double u) {
  double cum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

AuctionOutcome resolve_auction(const auction::AuctionGrid& grid,
                               std::span<const double> bids,
                               std::span<const double> ctrs, SplitMix64& rng) {
  const int n = static_cast<int>(bids.size());
  double best = -1.0, second = -1.0;
  int tied = 0;
  for (int i = 0; i < n; ++i) {
    const double score = bids[i] * ctrs[i];
    if (score > best) {
      second = best;
      best = score;
      tied = 1;
    } else if (score == best) {
      second = best;
      ++tied;
    } else if (score > second) {
      second = score;
    }
  }
  int pick = 0;
  if (tied > 1) {
    pick = rng.uniform_int(tied);
  }
  AuctionOutcome out;
  int seen = 0;
  for (int i = 0; i < n; ++i) {
    if (bids[i] * ctrs[i] == best && seen++ == pick) {
      out.winner = i;
      break;
    }
  }
  out.winning_bid = bids[out.winner];
  if (tied > 1) {
    out.payment_per_click = bids[out.winner];  // tie winner pays his placed bid
  } else {
    out.payment_per_click = second / ctrs[out.winner];
  }
  (void)grid;
  return out;
}

// Nearest-rank percentile of a sorted sample.
double nearest_rank(std::span<const double> sorted, double pct) {
  const int n = static_cast<int>(sorted.size());
  int rank = static_cast<int>(std::ceil(pct / 100.0 * n));
  rank = std::clamp(rank, 1, n);
  return sorted[rank - 1];
}

}  // namespace

void HeuristicConfig::validate() const {
  if (kappa < 1) throw GameError("HeuristicConfig: kappa >= 1 required");
  if (eta < 0.0 || eta > 1.0) throw GameError("HeuristicConfig: eta must lie in [0,1]");
  if (horizon < 1) throw GameError("HeuristicConfig: horizon >= 1 required");
  if (percentile_lo < 0.0 || percentile_hi > 100.0 || percentile_lo > percentile_hi) {
    throw GameError("HeuristicConfig: invalid percentile band");
  }
}

void BidDistribution::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw GameError("BidDistribution: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowNormTol) {
    throw GameError("BidDistribution: does not sum to 1");
  }
}

AuctionOutcome simulate_auction(const auction::AuctionGrid& grid,
                                std::span<const double> bids,
                                std::span<const double> ctrs, std::uint64_t seed) {
  if (bids.size() != static_cast<size_t>(grid.density) || bids.size() != ctrs.size()) {
    throw GameError("simulate_auction: sample lengths must equal the auction density");
  }
  SplitMix64 rng(stream_seed(seed, 0, 0));
  return resolve_auction(grid, bids, ctrs, rng);
}

BidDistribution discretize_uniform_band(std::span<const double> bid_values,
                                        double lo, double hi) {
  const size_t n = bid_values.size();
  BidDistribution out;
  out.probs.assign(n, 0.0);

  if (hi > lo) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double left = (i == 0) ? -std::numeric_limits<double>::infinity()
                                   : 0.5 * (bid_values[i - 1] + bid_values[i]);
      const double right = (i + 1 == n) ? std::numeric_limits<double>::infinity()
                                        : 0.5 * (bid_values[i] + bid_values[i + 1]);
      const double m = std::max(0.0, std::min(right, hi) - std::max(left, lo));
      out.probs[i] = m;
      total += m;
    }
    if (total > 0.0) {
      for (double& p : out.probs) p /= total;
      return out;
    }
  }
  // Degenerate band: point mass at the nearest grid bid.
  const double mid = 0.5 * (lo + hi);
  size_t best = 0;
  for (size_t i = 1; i < n; ++i) {
    if (std::abs(bid_values[i] - mid) < std::abs(bid_values[best] - mid)) best = i;
  }
  out.probs[best] = 1.0;
  return out;
}

StepResult heuristic_step(const auction::AuctionGrid& grid,
                          const BidDistribution& alpha_prev,
                          const HeuristicConfig& cfg, int t) {
  const int n = grid.density;
  std::vector<double> bids(n), ctrs(n), winning(cfg.kappa);
  for (int k = 0; k < cfg.kappa; ++k) {
    SplitMix64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(t),
                               static_cast<std::uint64_t>(k)));
    for (int i = 0; i < n; ++i) {
      bids[i] = grid.bid_values[sample_index(alpha_prev.probs, rng.uniform())];
      ctrs[i] = grid.ctr_values[sample_index(grid.state_dist, rng.uniform())];
    }
    winning[k] = resolve_auction(grid, bids, ctrs, rng).winning_bid;
  }
  std::sort(winning.begin(), winning.end());

  StepResult res;
  res.band_lo = nearest_rank(winning, cfg.percentile_lo);
  res.band_hi = nearest_rank(winning, cfg.percentile_hi);

  const BidDistribution target =
      discretize_uniform_band(grid.bid_values, res.band_lo, res.band_hi);
  res.alpha_next.probs.resize(alpha_prev.probs.size());
  for (size_t i = 0; i < alpha_prev.probs.size(); ++i) {
    res.alpha_next.probs[i] =
        alpha_prev.probs[i] + cfg.eta * (target.probs[i] - alpha_prev.probs[i]);
  }
  return res;
}

Trajectory run_heuristic(const auction::AuctionGrid& grid,
                         const BidDistribution& alpha0, const HeuristicConfig& cfg) {
  cfg.validate();
  alpha0.validate();
  if (alpha0.probs.size() != static_cast<size_t>(grid.num_actions())) {
    throw GameError("run_heuristic: alpha0 length must match the bid grid");
  }
  Trajectory traj;
  traj.alphas.push_back(alpha0);
  for (int t = 1; t <= cfg.horizon; ++t) {
    StepResult step = heuristic_step(grid, traj.alphas.back(), cfg, t);
    traj.alphas.push_back(std::move(step.alpha_next));
    traj.band_lo.push_back(step.band_lo);
    traj.band_hi.push_back(step.band_hi);
  }
  return traj;
}

Policy heuristic_policy(const auction::AuctionGrid& grid,
                        const BidDistribution& alpha, int horizon) {
  alpha.validate();
  if (alpha.probs.size() != static_cast<size_t>(grid.num_actions())) {
    throw GameError("heuristic_policy: alpha length must match the bid grid");
  }
  Policy pi(horizon, grid.num_states(), grid.num_actions());
  for (int t = 0; t <= horizon; ++t) {
    for (int s = 0; s < grid.num_states(); ++s) {
      for (int a = 0; a < grid.num_actions(); ++a) {
        pi.at(t, s, a) = alpha.probs[a];
      }
    }
  }
  return pi;
}

}  // namespace mfg::heuristic
