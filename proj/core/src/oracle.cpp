#include "mfg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace mfg::oracle {

namespace {

double sq(double x) { return x * x; }

}  // namespace

McAuctionStats mc_auction_stats(const auction::AuctionGrid& grid,
                                std::span<const double> flow_slice, long samples,
                                std::uint64_t seed) {
  if (samples < 10000) throw GameError("mc_auction_stats: samples >= 10^4 required");
  const int S = grid.num_states(), A = grid.num_actions();
  const int n1 = grid.density - 1;
  const auction::ScoreIndex index = auction::ScoreIndex::build(grid);
  const int R = index.num_ranks();

  // Rank pmf of one opponent drawn from the flow slice.
  std::vector<double> rank_cum(R, 0.0);
  {
    double cum = 0.0;
    for (int r = 0; r < R; ++r) {
      for (int p : index.rank_to_pairs[r]) cum += flow_slice[p];
      rank_cum[r] = cum;
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto sample_rank = [&]() {
    const double u = unif(rng) * rank_cum[R - 1];
    return static_cast<int>(std::lower_bound(rank_cum.begin(), rank_cum.end(), u) -
                            rank_cum.begin());
  };

  // Per-trial outcome depends only on the opponents' max rank m, the count
  // of opponents at m, and the tie coin. Aggregate per rank and recover the
  // per-pair trial sums with prefix sums afterwards.
  std::vector<double> cnt_max(R, 0.0);   // trials whose opponent max rank is m
  std::vector<double> tie_wins(R, 0.0);  // of those, tie coin won by a rep at m
  for (long trial = 0; trial < samples; ++trial) {
    int max_rank = -1, count = 0;
    for (int i = 0; i < n1; ++i) {
      const int r = sample_rank();
      if (r > max_rank) {
        max_rank = r;
        count = 1;
      } else if (r == max_rank) {
        ++count;
      }
    }
    cnt_max[max_rank] += 1.0;
    if (unif(rng) * (count + 1) < 1.0) tie_wins[max_rank] += 1.0;
  }

  // Prefix sums over ranks strictly below l: solo-win trial count and the
  // first/second moments of the solo payment (the opponents' max score).
  std::vector<double> below_cnt(R + 1, 0.0), below_pay(R + 1, 0.0), below_pay2(R + 1, 0.0);
  for (int r = 0; r < R; ++r) {
    below_cnt[r + 1] = below_cnt[r] + cnt_max[r];
    below_pay[r + 1] = below_pay[r] + cnt_max[r] * index.scores[r];
    below_pay2[r + 1] = below_pay2[r] + cnt_max[r] * sq(index.scores[r]);
  }

  McAuctionStats st;
  st.samples = samples;
  const size_t dim = static_cast<size_t>(S) * A;
  st.win.assign(dim, 0.0);
  st.win_se.assign(dim, 0.0);
  st.ctr.assign(dim, 0.0);
  st.ctr_se.assign(dim, 0.0);
  st.cpc.assign(dim, 0.0);
  st.cpc_se.assign(dim, 0.0);
  st.sale.assign(dim, 0.0);
  st.sale_se.assign(dim, 0.0);

  const double N = static_cast<double>(samples);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const size_t p = static_cast<size_t>(s) * A + a;
      const int l = index.rank_of(s, a, A);
      const double ctr = grid.ctr_values[s];
      const double bid = grid.bid_values[a];
      const double wins = below_cnt[l] + tie_wins[l];
      const double tie_pay = bid * ctr;

      auto finish = [&](double sum, double sumsq, double& mean, double& se) {
        mean = sum / N;
        const double var = std::max(0.0, sumsq / N - mean * mean);
        se = std::sqrt(var / N);
      };
      finish(wins, wins, st.win[p], st.win_se[p]);
      finish(wins * ctr, wins * sq(ctr), st.ctr[p], st.ctr_se[p]);
      finish(wins * grid.utility * ctr, wins * sq(grid.utility * ctr), st.sale[p],
             st.sale_se[p]);
      finish(below_pay[l] + tie_wins[l] * tie_pay,
             below_pay2[l] + tie_wins[l] * sq(tie_pay), st.cpc[p], st.cpc_se[p]);
    }
  }
  return st;
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> point, double step) {
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + step;
    const double fp = f(x);
    x[i] = orig - step;
    const double fm = f(x);
    x[i] = orig;
    grad[i] = (std::isfinite(fp) && std::isfinite(fm))
                  ? (fp - fm) / (2.0 * step)
                  : std::numeric_limits<double>::quiet_NaN();
  }
  return grad;
}

namespace {

// Forward flow recursion, independent of propagate_flow.
FlowTable oracle_flow(const GameSpec& spec, const Policy& pi) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  FlowTable flow(T, S, A);
  std::vector<double> marginal(spec.initial_dist.begin(), spec.initial_dist.end());
  std::vector<double> probs(S);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) flow.at(t, s, a) = marginal[s] * pi.at(t, s, a);
    }
    if (t == T) break;
    std::vector<double> next(S, 0.0);
    auto lt = flow.slice(t);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        spec.transition(t, s, a, lt, probs);
        for (int sp = 0; sp < S; ++sp) next[sp] += flow.at(t, s, a) * probs[sp];
      }
    }
    marginal = next;
  }
  return flow;
}

// mu0-weighted value of pi against a fixed flow, by direct recursion.
double oracle_value(const GameSpec& spec, const FlowTable& flow, const Policy& pi) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  std::vector<double> v(S, 0.0), probs(S);
  for (int t = T; t >= 0; --t) {
    std::vector<double> w(S, 0.0);
    auto lt = flow.slice(t);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double q = spec.reward(t, s, a, lt);
        if (t < T) {
          spec.transition(t, s, a, lt, probs);
          for (int sp = 0; sp < S; ++sp) q += probs[sp] * v[sp];
        }
        w[s] += pi.at(t, s, a) * q;
      }
    }
    v = w;
  }
  double total = 0.0;
  for (int s = 0; s < S; ++s) total += spec.initial_dist[s] * v[s];
  return total;
}

}  // namespace

double brute_exploitability(const GameSpec& spec, const Policy& policy) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  if (S * A * (T + 1) > 12) {
    throw GameError("brute_exploitability: instance too large");
  }
  const int decisions = S * (T + 1);
  double count = std::pow(static_cast<double>(A), decisions);
  if (count > 4096.0) {
    throw GameError("brute_exploitability: too many deterministic policies");
  }

  const FlowTable flow = oracle_flow(spec, policy);
  const double base = oracle_value(spec, flow, policy);

  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> choice(decisions, 0);
  const long total = static_cast<long>(count);
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int i = 0; i < decisions; ++i) {
      choice[i] = static_cast<int>(c % A);
      c /= A;
    }
    Policy det(T, S, A);
    for (int t = 0; t <= T; ++t) {
      for (int s = 0; s < S; ++s) det.at(t, s, choice[t * S + s]) = 1.0;
    }
    best = std::max(best, oracle_value(spec, flow, det));
  }
  return best - base;
}

std::vector<double> qp_projection(std::span<const double> point, ConstraintSet set,
                                  double bound) {
  const size_t n = point.size();
  if (n > 6) throw GameError("qp_projection: dimension <= 6 required");

  if (set == ConstraintSet::kBall) {
    double norm = 0.0;
    for (double v : point) norm += v * v;
    norm = std::sqrt(norm);
    std::vector<double> out(point.begin(), point.end());
    if (norm > bound) {
      for (double& v : out) v *= bound / norm;
    }
    return out;
  }

  double best_dist = std::numeric_limits<double>::infinity();
  std::vector<double> best;
  auto consider = [&](const std::vector<double>& x) {
    double dist = 0.0;
    for (size_t i = 0; i < n; ++i) dist += sq(x[i] - point[i]);
    if (dist < best_dist) {
      best_dist = dist;
      best = x;
    }
  };

  if (set == ConstraintSet::kBudgetCone) {
    // Interior candidate: the orthant-clipped point, when within budget.
    std::vector<double> clip(n);
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
      clip[i] = std::max(point[i], 0.0);
      sum += clip[i];
    }
    if (sum <= bound) consider(clip);
  }

  // Facet candidates: free coordinates share a common shift so that the
  // active-sum constraint holds with equality; the rest pin to zero.
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    double sum = 0.0;
    int k = 0;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum += point[i];
        ++k;
      }
    }
    const double shift = (sum - bound) / k;
    std::vector<double> x(n, 0.0);
    bool feasible = true;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        x[i] = point[i] - shift;
        if (x[i] < 0.0) feasible = false;
      }
    }
    if (feasible) consider(x);
  }
  return best;
}

}  // namespace oracle

