#include "mfg/auction.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

namespace mfg::auction {

namespace {

// Scores rounded to 12 decimal digits before deduplication, so equal
// products from different (s,a) pairs land on a single rank.
double round_score(double z) { return std::round(z * 1e12) / 1e12; }

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

std::vector<double> binomials(int n) {
  std::vector<double> c(n + 1);
  c[0] = 1.0;
  for (int i = 1; i <= n; ++i) c[i] = c[i - 1] * (n - i + 1) / i;
  return c;
}

}  // namespace

void AuctionGrid::validate() const {
  if (ctr_values.empty() || bid_values.empty()) {
    throw GameError("AuctionGrid: empty grid");
  }
  for (size_t i = 0; i < ctr_values.size(); ++i) {
    if (ctr_values[i] <= 0.0 || ctr_values[i] > 1.0) {
      throw GameError("AuctionGrid: ctr values must lie in (0,1]");
    }
    if (i > 0 && ctr_values[i] <= ctr_values[i - 1]) {
      throw GameError("AuctionGrid: ctr values must be strictly increasing");
    }
  }
  for (size_t i = 0; i < bid_values.size(); ++i) {
    if (bid_values[i] < 0.0) throw GameError("AuctionGrid: negative bid");
    if (i > 0 && bid_values[i] < bid_values[i - 1]) {
      throw GameError("AuctionGrid: bid values must be non-decreasing");
    }
  }
  // The win-probability formulas degenerate at n=1 (empty sums); rejected
  // rather than patched.
  if (density < 2) throw GameError("AuctionGrid: density must be >= 2");
  if (utility <= 0.0) throw GameError("AuctionGrid: utility must be positive");
  if (state_dist.size() != ctr_values.size()) {
    throw GameError("AuctionGrid: state_dist length mismatch");
  }
  double sum = 0.0;
  for (double p : state_dist) {
    if (p <= 0.0) throw GameError("AuctionGrid: state_dist must be strictly positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowNormTol) {
    throw GameError("AuctionGrid: state_dist does not sum to 1");
  }
}

double AuctionGrid::reward_bound() const {
  double r = 0.0;
  for (double s : ctr_values) {
    for (double a : bid_values) {
      r = std::max(r, std::max(utility * s, s * a));
    }
  }
  return r;
}

ScoreIndex ScoreIndex::build(const AuctionGrid& grid) {
  const int S = grid.num_states(), A = grid.num_actions();
  std::map<double, std::vector<int>> by_score;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      by_score[round_score(grid.ctr_values[s] * grid.bid_values[a])].push_back(s * A + a);
    }
  }
  ScoreIndex index;
  index.pair_to_rank.assign(static_cast<size_t>(S) * A, -1);
  for (auto& [score, pairs] : by_score) {
    const int rank = index.num_ranks();
    index.scores.push_back(score);
    for (int p : pairs) index.pair_to_rank[p] = rank;
    index.rank_to_pairs.push_back(std::move(pairs));
  }
  return index;
}

void WelfareParams::validate() const {
  if (c1 < 0.0 || c2 < 0.0 || c3 < 0.0) {
    throw GameError("WelfareParams: coefficients must be non-negative");
  }
  if (eps0 <= 0.0 || eps1 <= 0.0 || eps2 <= 0.0 || eps3 <= 0.0) {
    throw GameError("WelfareParams: epsilon guards must be strictly positive");
  }
}

ScoreDistribution score_distribution(const AuctionGrid& grid, const ScoreIndex& index,
                                     std::span<const double> flow_slice) {
  const int R = index.num_ranks();
  ScoreDistribution dist;
  dist.pmf.assign(R, 0.0);
  dist.cum_below.assign(R, 0.0);
  for (int l = 0; l < R; ++l) {
    for (int p : index.rank_to_pairs[l]) dist.pmf[l] += flow_slice[p];
  }
  double cum = 0.0;
  for (int l = 0; l < R; ++l) {
    dist.cum_below[l] = cum;
    cum += dist.pmf[l];
  }
  (void)grid;
  return dist;
}

WinProbs win_probabilities(const AuctionGrid& grid, const ScoreIndex& index,
                           int s, int a, std::span<const double> flow_slice) {
  const int A = grid.num_actions();
  if (s < 0 || s >= grid.num_states() || a < 0 || a >= A) {
    throw GameError("win_probabilities: (s,a) off-grid");
  }
  const ScoreDistribution dist = score_distribution(grid, index, flow_slice);
  const int l = index.rank_of(s, a, A);
  const int n1 = grid.density - 1;

  WinProbs wp;
  // Solo win: all n-1 opponents strictly below rank l, summed over the
  // second-highest rank j < l.
  for (int j = 0; j < l; ++j) {
    const double hi = (j + 1 < index.num_ranks()) ? dist.cum_below[j + 1] : 1.0;
    wp.solo += ipow(hi, n1) - ipow(dist.cum_below[j], n1);
  }
  // Tie: i of the n-1 opponents share rank l, the rest lie strictly below.
  const std::vector<double> binom = binomials(n1);
  for (int i = 1; i <= n1; ++i) {
    wp.tie += binom[i] / (i + 1) * ipow(dist.cum_below[l], n1 - i) * ipow(dist.pmf[l], i);
  }
  return wp;
}

ExpectedMetrics expected_metrics(const AuctionGrid& grid, const ScoreIndex& index,
                                 int s, int a, std::span<const double> flow_slice) {
  const int A = grid.num_actions();
  if (s < 0 || s >= grid.num_states() || a < 0 || a >= A) {
    throw GameError("expected_metrics: (s,a) off-grid");
  }
  const ScoreDistribution dist = score_distribution(grid, index, flow_slice);
  const int l = index.rank_of(s, a, A);
  const int n1 = grid.density - 1;
  const double ctr = grid.ctr_values[s];
  const double bid = grid.bid_values[a];

  double p1 = 0.0, cpc_solo = 0.0;
  for (int j = 0; j < l; ++j) {
    const double hi = (j + 1 < index.num_ranks()) ? dist.cum_below[j + 1] : 1.0;
    const double term = ipow(hi, n1) - ipow(dist.cum_below[j], n1);
    p1 += term;
    cpc_solo += term * index.scores[j];  // pays the second-highest score z_j
  }
  double p2 = 0.0;
  const std::vector<double> binom = binomials(n1);
  for (int i = 1; i <= n1; ++i) {
    p2 += binom[i] / (i + 1) * ipow(dist.cum_below[l], n1 - i) * ipow(dist.pmf[l], i);
  }

  ExpectedMetrics m;
  m.ctr = (p1 + p2) * ctr;
  m.sale = (p1 + p2) * grid.utility * ctr;
  m.cpc = cpc_solo + p2 * bid * ctr;  // tie winner pays his placed bid
  return m;
}

double bidder_reward(const AuctionGrid& grid, const ScoreIndex& index, int s,
                     int a, std::span<const double> flow_slice) {
  const ExpectedMetrics m = expected_metrics(grid, index, s, a, flow_slice);
  return m.sale - m.cpc;
}

double welfare_link(const WelfareParams& p, double v1, double v2, double v3) {
  const double w = p.c1 * std::log(v1 + p.eps1) +
                   p.c2 * std::log(v2 / (v1 * v3 + p.eps0) + p.eps2) +
                   p.c3 * std::log(v1 * v3 + p.eps3);
  if (!std::isfinite(w)) {
    throw EvaluatorDomainError("welfare_link: non-finite output");
  }
  return w;
}

MetricGrads expected_metric_grads(const AuctionGrid& grid, const ScoreIndex& index,
                                  int s, int a, std::span<const double> flow_slice) {
  const int A = grid.num_actions();
  const int R = index.num_ranks();
  const ScoreDistribution dist = score_distribution(grid, index, flow_slice);
  const int l = index.rank_of(s, a, A);
  const int n1 = grid.density - 1;
  const double ctr = grid.ctr_values[s];
  const double bid = grid.bid_values[a];

  // Accumulate d(metric)/d(cum_below[j]) for j = 1..l, then convert to
  // d/d(pmf[m]) via d(cum_below[j])/d(pmf[m]) = [m < j] (suffix sums).
  // cum_below[0] = 0 is constant.
  std::vector<double> p1_cb(R + 1, 0.0), cpc_cb(R + 1, 0.0);
  for (int j = 0; j < l; ++j) {
    const double hi = (j + 1 < R) ? dist.cum_below[j + 1] : 1.0;
    const double dhi = n1 * ipow(hi, n1 - 1);
    const double dlo = n1 * ipow(dist.cum_below[j], n1 - 1);
    if (j + 1 < R) {
      p1_cb[j + 1] += dhi;
      cpc_cb[j + 1] += dhi * index.scores[j];
    }
    if (j > 0) {
      p1_cb[j] -= dlo;
      cpc_cb[j] -= dlo * index.scores[j];
    }
  }

  // P2 depends on cum_below[l] and directly on pmf[l].
  double p2_cbl = 0.0, p2_pmfl = 0.0;
  const std::vector<double> binom = binomials(n1);
  for (int i = 1; i <= n1; ++i) {
    const double c = binom[i] / (i + 1);
    if (n1 - i > 0) {
      p2_cbl += c * (n1 - i) * ipow(dist.cum_below[l], n1 - i - 1) * ipow(dist.pmf[l], i);
    }
    p2_pmfl += c * i * ipow(dist.cum_below[l], n1 - i) * ipow(dist.pmf[l], i - 1);
  }

  // Per-rank gradients via suffix sums over the cb coefficients.
  std::vector<double> dp1(R, 0.0), dcpc_solo(R, 0.0), dp2(R, 0.0);
  double suf_p1 = 0.0, suf_cpc = 0.0;
  for (int m = R - 1; m >= 0; --m) {
    suf_p1 += p1_cb[m + 1];
    suf_cpc += cpc_cb[m + 1];
    dp1[m] = suf_p1;
    dcpc_solo[m] = suf_cpc;
    if (m < l) dp2[m] += p2_cbl;  // through cum_below[l]
  }
  if (l < R) dp2[l] += p2_pmfl;

  MetricGrads g;
  const size_t dim = flow_slice.size();
  g.ctr.assign(dim, 0.0);
  g.cpc.assign(dim, 0.0);
  g.sale.assign(dim, 0.0);
  for (size_t p = 0; p < dim; ++p) {
    const int m = index.pair_to_rank[p];
    const double dwin = dp1[m] + dp2[m];
    g.ctr[p] = dwin * ctr;
    g.sale[p] = dwin * grid.utility * ctr;
    g.cpc[p] = dcpc_solo[m] + dp2[m] * bid * ctr;
  }
  return g;
}

GameSpec build_game_spec(const AuctionGrid& grid, const WelfareParams& params,
                         int horizon) {
  grid.validate();
  params.validate();
  auto shared_grid = std::make_shared<AuctionGrid>(grid);
  auto shared_index = std::make_shared<ScoreIndex>(ScoreIndex::build(grid));
  auto shared_params = std::make_shared<WelfareParams>(params);

  GameSpec spec;
  spec.num_states = grid.num_states();
  spec.num_actions = grid.num_actions();
  spec.horizon = horizon;
  spec.initial_dist = grid.state_dist;
  spec.num_metrics = 3;
  spec.reward_bound = grid.reward_bound();
  spec.smooth = true;

  // No state transition: s_{t+1} = s_t deterministically, so that
  // propagate_flow(pi)_t(s,a) = mu(s) pi_t(a|s) for all t.
  const int S = spec.num_states;
  spec.transition = [S](int, int s, int, std::span<const double>,
                        std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    out[s] = 1.0;
  };
  spec.transition_jac = nullptr;  // identity kernel: zero derivative

  spec.reward = [shared_grid, shared_index](int, int s, int a,
                                            std::span<const double> lt) {
    return bidder_reward(*shared_grid, *shared_index, s, a, lt);
  };
  spec.reward_grad = [shared_grid, shared_index](int, int s, int a,
                                                 std::span<const double> lt,
                                                 std::span<double> out) {
    const MetricGrads g = expected_metric_grads(*shared_grid, *shared_index, s, a, lt);
    for (size_t i = 0; i < out.size(); ++i) out[i] = g.sale[i] - g.cpc[i];
  };

  // k = 0: CTR, k = 1: SALE, k = 2: CPC.
  spec.social_metric = [shared_grid, shared_index](int k, int, int s, int a,
                                                   std::span<const double> lt) {
    const ExpectedMetrics m = expected_metrics(*shared_grid, *shared_index, s, a, lt);
    return k == 0 ? m.ctr : (k == 1 ? m.sale : m.cpc);
  };
  spec.metric_grad = [shared_grid, shared_index](int k, int, int s, int a,
                                                 std::span<const double> lt,
                                                 std::span<double> out) {
    const MetricGrads g = expected_metric_grads(*shared_grid, *shared_index, s, a, lt);
    const std::vector<double>& src = (k == 0 ? g.ctr : (k == 1 ? g.sale : g.cpc));
    std::copy(src.begin(), src.end(), out.begin());
  };

  spec.link = [shared_params](std::span<const double> v) {
    return welfare_link(*shared_params, v[0], v[1], v[2]);
  };
  spec.link_grad = [shared_params](std::span<const double> v, std::span<double> out) {
    const WelfareParams& p = *shared_params;
    const double g = v[0] * v[2] + p.eps0;      // V1*V3 + eps0
    const double h = v[1] / g + p.eps2;
    const double q = v[0] * v[2] + p.eps3;
    out[0] = p.c1 / (v[0] + p.eps1) - p.c2 * v[1] * v[2] / (g * g) / h + p.c3 * v[2] / q;
    out[1] = p.c2 / g / h;
    out[2] = -p.c2 * v[1] * v[0] / (g * g) / h + p.c3 * v[0] / q;
  };

  spec.validate();
  return spec;
}

Preset preset(const std::string& name) {
  Preset p;
  if (name == "paper-sec3") {
    p.grid.ctr_values = {0.2, 0.4, 0.6};
    p.grid.bid_values = {0.0, 1.25, 2.5, 3.75, 5.0};
    p.grid.density = 5;
    p.grid.utility = 2.0;
    p.grid.state_dist = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  } else if (name == "paper-appB") {
    const int n = 20;
    for (int i = 0; i < n; ++i) {
      p.grid.ctr_values.push_back(0.01 + i * (1.0 - 0.01) / (n - 1));
      p.grid.bid_values.push_back(i * 5.0 / (n - 1));
    }
    p.grid.density = 30;
    p.grid.utility = 5.0;
    p.grid.state_dist = discretize_truncated_normal(p.grid.ctr_values, 0.2, 0.3);
  } else if (name == "toy-1x1") {
    p.grid.ctr_values = {0.5};
    p.grid.bid_values = {1.0};
    p.grid.density = 2;
    p.grid.utility = 1.0;
    p.grid.state_dist = {1.0};
  } else {
    throw GameError("unknown preset: " + name);
  }
  p.grid.validate();
  return p;
}

std::vector<std::string> preset_names() {
  return {"paper-sec3", "paper-appB", "toy-1x1"};
}

std::vector<double> discretize_truncated_normal(std::span<const double> grid_values,
                                                double mean, double stddev) {
  std::vector<double> w(grid_values.size());
  double sum = 0.0;
  for (size_t i = 0; i < grid_values.size(); ++i) {
    const double z = (grid_values[i] - mean) / stddev;
    w[i] = std::exp(-0.5 * z * z);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

}  // namespace mfg::auction
