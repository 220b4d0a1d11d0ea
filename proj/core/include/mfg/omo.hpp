#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfg/game.hpp"

// Penalized occupation-measure optimization over the triple (y, z, d):
// residuals, complementarity, gradients, projections, and a projected
// gradient solver that trades Nash-equilibrium proximity against a
// general-utility welfare objective.
namespace mfg::omo {

// Solver variable triple. y is the auxiliary dual variable (length S(T+1),
// indexed y_{t,s}), z the non-negative slack (length SA(T+1)), d the
// occupation measure.
struct OmoIterate {
  std::vector<double> y;
  std::vector<double> z;
  FlowTable d;
};

// 1'z <= SA(T^2+T+2) r_max.
double z_budget(const GameSpec& spec);
// ||y||_2 <= S(T+1)(T+2) r_max / 2.
double y_radius(const GameSpec& spec);

// Trade-off and penalty weights. lambda1 = 0 (pure competition) or
// lambda2 = 0 (pure cooperation) are permitted presets.
struct Weights {
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  double rho1 = 1.0;
  double rho2 = 0.1;

  void validate() const;
};

enum class InitMode { kUniform, kRandom, kWarmStart };

struct SolverConfig {
  double step_size = 0.01;
  int max_iters = 1500;
  double grad_tol = 0.0;  // stop when the projected-gradient norm falls below
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::kUniform;
};

// g^CS(d): initial-marginal mismatch plus flow-update mismatch under
// P_t(.|.,.,d_t), both as quadratic sums.
double consistency_residual(const GameSpec& spec, const FlowTable& d);

// h^BR(y,z,d): the three squared-term groups coupling y, z and the rewards/
// dynamics evaluated at d. For T = 0 the first two groups are empty sums.
double best_response_residual(const GameSpec& spec, std::span<const double> y,
                              std::span<const double> z, const FlowTable& d);

// -lambda1 V(d) + lambda2 z'd + rho1 g^CS(d) + rho2 h^BR(y,z,d).
double objective(const GameSpec& spec, const OmoIterate& it, const Weights& w);

struct Gradient {
  std::vector<double> y;
  std::vector<double> z;
  std::vector<double> d;
};
// Exact gradient of the objective, including the dependence of the
// transition, reward and metric evaluators on the flow slices. Throws
// GameError if the game declares itself non-smooth.
Gradient gradient(const GameSpec& spec, const OmoIterate& it, const Weights& w);

// Euclidean projection of each time slice independently onto the
// probability simplex over S*A coordinates.
FlowTable project_d(const FlowTable& d_raw);
// In-place simplex projection of one slice with total mass `total`.
void project_simplex(std::span<double> x, double total = 1.0);
// Euclidean projection onto {z >= 0, 1'z <= budget}.
std::vector<double> project_z(std::span<const double> z_raw, double budget);
// Euclidean projection onto the L2 ball of the given radius.
std::vector<double> project_y(std::span<const double> y_raw, double radius);

struct IterationStats {
  double objective = 0.0;
  double g_cs = 0.0;
  double h_br = 0.0;
  double comp = 0.0;  // z'd
};

enum class SolveStatus { kMaxIters, kGradTol, kNonFinite };

struct SolveResult {
  OmoIterate iterate;
  SolveStatus status = SolveStatus::kMaxIters;
  int iterations = 0;
  double final_step = 0.0;
  std::vector<IterationStats> trace;  // one entry per completed iteration
};

// Projected gradient descent with Nesterov momentum and adaptive restart:
// steps are taken from an extrapolated point, and whenever a step would
// increase the objective the momentum resets and a plain step is backtracked
// by halving from the base step, keeping the objective trace non-increasing.
// Deterministic given (seed, config). A non-finite objective aborts with
// status kNonFinite and the offending iterate left in the result.
SolveResult solve(const GameSpec& spec, const Weights& w, const SolverConfig& cfg,
                  std::optional<OmoIterate> warm = std::nullopt);

// Diagnostic report pairing the complementarity term with the retrieved
// policy's exploitability. slack = C (sqrt(g_cs) + sqrt(h_br)) with the
// documented default constant C = 10 r_max S A (T+1).
struct ComplementarityReport {
  double comp = 0.0;
  double g_cs = 0.0;
  double h_br = 0.0;
  double expl = 0.0;  // exploitability of the retrieved policy
  double slack = 0.0;
  bool bound_satisfied = false;  // comp + slack >= expl
};
double default_slack_constant(const GameSpec& spec);
ComplementarityReport complementarity_check(const OmoIterate& it, const GameSpec& spec,
                                            double slack_constant = -1.0);

}  // namespace mfg::omo
