#include "mfg/game.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfg {

namespace {

void check_shape(const GameSpec& spec, int T, int S, int A, const char* what) {
  if (T != spec.horizon || S != spec.num_states || A != spec.num_actions) {
    throw GameError(std::string(what) + ": shape disagrees with game spec");
  }
}

}  // namespace

void GameSpec::validate() const {
  if (num_states <= 0 || num_actions <= 0 || horizon < 0) {
    throw GameError("GameSpec: num_states, num_actions must be positive and horizon non-negative");
  }
  if (static_cast<int>(initial_dist.size()) != num_states) {
    throw GameError("GameSpec: initial_dist length != num_states");
  }
  double sum = 0.0;
  for (double p : initial_dist) {
    if (p <= 0.0) throw GameError("GameSpec: initial_dist must be strictly positive");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kRowNormTol) {
    throw GameError("GameSpec: initial_dist does not sum to 1");
  }
  if (!transition || !reward) throw GameError("GameSpec: missing evaluators");
  if (num_metrics > 0 && (!social_metric || !link)) {
    throw GameError("GameSpec: social metrics declared but evaluators missing");
  }
  if (reward_bound <= 0.0) throw GameError("GameSpec: reward_bound must be positive");
}

Policy Policy::uniform(int T, int S, int A) {
  Policy p(T, S, A);
  std::fill(p.probs.begin(), p.probs.end(), 1.0 / A);
  return p;
}

void Policy::validate() const {
  if (probs.size() != static_cast<size_t>(horizon + 1) * num_states * num_actions) {
    throw GameError("Policy: storage size mismatch");
  }
  for (int t = 0; t <= horizon; ++t) {
    for (int s = 0; s < num_states; ++s) {
      double sum = 0.0;
      for (int a = 0; a < num_actions; ++a) {
        const double p = at(t, s, a);
        if (p < 0.0) throw GameError("Policy: negative probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowNormTol) {
        throw GameError("Policy: row does not sum to 1");
      }
    }
  }
}

void FlowTable::validate() const {
  if (mass.size() != static_cast<size_t>(horizon + 1) * num_states * num_actions) {
    throw GameError("FlowTable: storage size mismatch");
  }
  for (int t = 0; t <= horizon; ++t) {
    auto sl = slice(t);
    double sum = 0.0;
    for (double m : sl) {
      if (m < 0.0) throw GameError("FlowTable: negative mass");
      sum += m;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
      throw GameError("FlowTable: slice does not sum to 1");
    }
  }
}

FlowTable propagate_flow(const GameSpec& spec, const Policy& policy) {
  check_shape(spec, policy.horizon, policy.num_states, policy.num_actions, "propagate_flow");
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;

  FlowTable flow(T, S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      flow.at(0, s, a) = spec.initial_dist[s] * policy.at(0, s, a);
    }
  }

  std::vector<double> next_marginal(S), probs(S);
  for (int t = 0; t < T; ++t) {
    std::fill(next_marginal.begin(), next_marginal.end(), 0.0);
    auto lt = flow.slice(t);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double m = flow.at(t, s, a);
        if (m == 0.0) continue;
        spec.transition(t, s, a, lt, probs);
        for (int sp = 0; sp < S; ++sp) next_marginal[sp] += m * probs[sp];
      }
    }
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        flow.at(t + 1, s, a) = policy.at(t + 1, s, a) * next_marginal[s];
      }
    }
  }
  return flow;
}

std::vector<double> policy_value(const GameSpec& spec, const FlowTable& flow,
                                 const Policy& policy) {
  check_shape(spec, policy.horizon, policy.num_states, policy.num_actions, "policy_value");
  check_shape(spec, flow.horizon, flow.num_states, flow.num_actions, "policy_value");
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;

  std::vector<double> value(S, 0.0), next(S, 0.0), probs(S);
  for (int t = T; t >= 0; --t) {
    auto lt = flow.slice(t);
    for (int s = 0; s < S; ++s) {
      double w = 0.0;
      for (int a = 0; a < A; ++a) {
        const double p = policy.at(t, s, a);
        if (p == 0.0) continue;
        double q = spec.reward(t, s, a, lt);
        if (t < T) {
          spec.transition(t, s, a, lt, probs);
          for (int sp = 0; sp < S; ++sp) q += probs[sp] * next[sp];
        }
        w += p * q;
      }
      value[s] = w;
    }
    next = value;
  }
  return value;
}

BestResponse best_response(const GameSpec& spec, const FlowTable& flow) {
  check_shape(spec, flow.horizon, flow.num_states, flow.num_actions, "best_response");
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;

  BestResponse br;
  br.policy = Policy(T, S, A);
  std::vector<double> value(S, 0.0), next(S, 0.0), probs(S);
  for (int t = T; t >= 0; --t) {
    auto lt = flow.slice(t);
    for (int s = 0; s < S; ++s) {
      double best = 0.0;
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = spec.reward(t, s, a, lt);
        if (t < T) {
          spec.transition(t, s, a, lt, probs);
          for (int sp = 0; sp < S; ++sp) q += probs[sp] * next[sp];
        }
        if (a == 0 || q > best) {  // ties break to the lowest action index
          best = q;
          best_a = a;
        }
      }
      value[s] = best;
      br.policy.at(t, s, best_a) = 1.0;
    }
    next = value;
  }
  br.values = std::move(value);
  return br;
}

double exploitability(const GameSpec& spec, const Policy& policy) {
  const FlowTable flow = propagate_flow(spec, policy);
  const BestResponse br = best_response(spec, flow);
  const std::vector<double> j = policy_value(spec, flow, policy);

  double expl = 0.0;
  for (int s = 0; s < spec.num_states; ++s) {
    expl += spec.initial_dist[s] * (br.values[s] - j[s]);
  }
  if (expl < 0.0 && expl >= -kExplClampTol) expl = 0.0;
  return expl;
}

SocialValue social_value(const GameSpec& spec, const FlowTable& flow) {
  check_shape(spec, flow.horizon, flow.num_states, flow.num_actions, "social_value");
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  const int K = spec.num_metrics;

  SocialValue out;
  out.metrics.assign(K, 0.0);
  for (int k = 0; k < K; ++k) {
    double v = 0.0;
    for (int t = 0; t <= T; ++t) {
      auto lt = flow.slice(t);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double m = flow.at(t, s, a);
          if (m == 0.0) continue;
          v += m * spec.social_metric(k, t, s, a, lt);
        }
      }
    }
    out.metrics[k] = v;
  }
  out.welfare = spec.link(out.metrics);
  if (!std::isfinite(out.welfare)) {
    throw EvaluatorDomainError("social_value: link function produced a non-finite value");
  }
  return out;
}

Policy retrieve_policy(const FlowTable& d) {
  const int S = d.num_states, A = d.num_actions, T = d.horizon;
  for (double m : d.mass) {
    if (m < 0.0) throw GameError("retrieve_policy: negative occupation mass");
  }
  Policy pi(T, S, A);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      double row = 0.0;
      for (int a = 0; a < A; ++a) row += d.at(t, s, a);
      if (row > 0.0) {
        for (int a = 0; a < A; ++a) pi.at(t, s, a) = d.at(t, s, a) / row;
      } else {
        for (int a = 0; a < A; ++a) pi.at(t, s, a) = 1.0 / A;
      }
    }
  }
  return pi;
}

}  // namespace mfg
