#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Tabular mean-field game primitives: flow propagation, policy evaluation,
// best response, exploitability, social welfare, and policy retrieval from
// occupation measures.
//
// Conventions used throughout:
//   - timesteps run t = 0..T inclusive,
//   - a flow slice L_t is a joint distribution over (s, a), stored row-major
//     with flat index s * A + a,
//   - (t, s, a) tensors use the canonical flat index t*S*A + s*A + a.
namespace mfg {

inline constexpr double kSimplexTol = 1e-10;   // simplex membership
inline constexpr double kRowNormTol = 1e-12;   // probability-row normalization
inline constexpr double kExplClampTol = 1e-10; // exploitability clamp

class GameError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a link function or evaluator produces a non-finite value.
class EvaluatorDomainError : public GameError {
 public:
  using GameError::GameError;
};

// Writes P_t(.|s,a,L_t) into `out` (length S).
using TransitionFn =
    std::function<void(int t, int s, int a, std::span<const double> flow_slice,
                       std::span<double> out)>;
// r_t(s,a,L_t).
using RewardFn =
    std::function<double(int t, int s, int a, std::span<const double> flow_slice)>;
// Social-metric contribution r_t^(k)(s,a,L_t).
using MetricFn = std::function<double(int k, int t, int s, int a,
                                      std::span<const double> flow_slice)>;
// Link function F(v_1..v_K).
using LinkFn = std::function<double(std::span<const double> v)>;

// Optional derivative evaluators (all derivatives are with respect to the
// flow-slice entries L_t(sigma,alpha), flat index sigma*A + alpha).
//
// Writes dP_t(s'|s,a,L_t)/dL_t(.) into `out`, laid out as out[s'*S*A + i]
// for i over the S*A slice coordinates.
using TransitionJacFn =
    std::function<void(int t, int s, int a, std::span<const double> flow_slice,
                       std::span<double> out)>;
// Writes dr_t(s,a,L_t)/dL_t(.) into `out` (length S*A).
using RewardGradFn =
    std::function<void(int t, int s, int a, std::span<const double> flow_slice,
                       std::span<double> out)>;
using MetricGradFn =
    std::function<void(int k, int t, int s, int a,
                       std::span<const double> flow_slice, std::span<double> out)>;
// Writes dF/dv_k into `out` (length K).
using LinkGradFn =
    std::function<void(std::span<const double> v, std::span<double> out)>;

// A tabular mean-field game. Evaluators must be pure and reentrant; the
// struct is immutable after construction and safe to share across threads.
struct GameSpec {
  int num_states = 0;   // S
  int num_actions = 0;  // A
  int horizon = 0;      // T; timesteps 0..T inclusive
  std::vector<double> initial_dist;  // mu0, length S, strictly positive

  TransitionFn transition;
  RewardFn reward;
  int num_metrics = 0;  // K
  MetricFn social_metric;
  LinkFn link;
  double reward_bound = 0.0;  // r_max, supplied by the environment

  // Derivative evaluators; null means identically zero (an L-independent
  // evaluator). `smooth` declares that the environment is differentiable in
  // L_t; gradient-based solvers reject non-smooth environments.
  bool smooth = true;
  TransitionJacFn transition_jac;
  RewardGradFn reward_grad;
  MetricGradFn metric_grad;
  LinkGradFn link_grad;

  int flow_dim() const { return num_states * num_actions; }
  int flat_size() const { return (horizon + 1) * num_states * num_actions; }

  // Validates static fields (shapes, mu0); throws GameError on violation.
  void validate() const;
};

// Time-indexed stochastic policy pi_t(a|s), shape (T+1, S, A).
struct Policy {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> probs;  // canonical flat index

  Policy() = default;
  Policy(int T, int S, int A)
      : horizon(T), num_states(S), num_actions(A),
        probs(static_cast<size_t>(T + 1) * S * A, 0.0) {}

  double& at(int t, int s, int a) {
    return probs[(static_cast<size_t>(t) * num_states + s) * num_actions + a];
  }
  double at(int t, int s, int a) const {
    return probs[(static_cast<size_t>(t) * num_states + s) * num_actions + a];
  }

  static Policy uniform(int T, int S, int A);
  // Rows must be probability vectors within kRowNormTol.
  void validate() const;
};

// Time-indexed joint distribution over (s, a); doubles as the occupation
// measure variable d.
struct FlowTable {
  int horizon = 0;
  int num_states = 0;
  int num_actions = 0;
  std::vector<double> mass;  // canonical flat index

  FlowTable() = default;
  FlowTable(int T, int S, int A)
      : horizon(T), num_states(S), num_actions(A),
        mass(static_cast<size_t>(T + 1) * S * A, 0.0) {}

  double& at(int t, int s, int a) {
    return mass[(static_cast<size_t>(t) * num_states + s) * num_actions + a];
  }
  double at(int t, int s, int a) const {
    return mass[(static_cast<size_t>(t) * num_states + s) * num_actions + a];
  }

  std::span<const double> slice(int t) const {
    const size_t n = static_cast<size_t>(num_states) * num_actions;
    return {mass.data() + t * n, n};
  }
  std::span<double> slice(int t) {
    const size_t n = static_cast<size_t>(num_states) * num_actions;
    return {mass.data() + t * n, n};
  }

  // Each time slice must lie in the simplex within kSimplexTol.
  void validate() const;
};

// Gamma(pi): forward propagation of the policy through the mean-field
// dynamics. Slice 0 is mu0(s) pi_0(a|s); slice t+1 follows the recursive
// update under P_t(.|s,a,Gamma(pi)_t).
FlowTable propagate_flow(const GameSpec& spec, const Policy& policy);

// J(s, pi, L) for every s, with the flow treated as a fixed environment.
std::vector<double> policy_value(const GameSpec& spec, const FlowTable& flow,
                                 const Policy& policy);

// Backward-induction optimal values and the greedy policy against a fixed
// flow. Ties break to the lowest action index.
struct BestResponse {
  std::vector<double> values;  // W*(s) at t = 0
  Policy policy;
};
BestResponse best_response(const GameSpec& spec, const FlowTable& flow);

// Expl(pi) = sum_s mu0(s) [W*(s) - J(s,pi,Gamma(pi))], clamped to 0 when
// within kExplClampTol of it.
double exploitability(const GameSpec& spec, const Policy& policy);

// Per-metric values V^(k) and the linked welfare F(V^(1)..V^(K)).
struct SocialValue {
  std::vector<double> metrics;
  double welfare = 0.0;
};
SocialValue social_value(const GameSpec& spec, const FlowTable& flow);

// Pi(d): per-(t,s) normalization of an occupation measure. Zero-mass rows
// map to the uniform distribution.
Policy retrieve_policy(const FlowTable& d);

}  // namespace mfg
