#include "mfg/omo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mfg::omo {

namespace {

constexpr double kDescentSlack = 1e-12;
constexpr double kMinStep = 1e-16;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Cached transition rows P_t(.|s,a,d_t) for one slice, plus optional
// jacobians dP_t(s'|s,a,d_t)/dL(i), laid out jac[(s*A+a)*S*SA + s'*SA + i].
struct SliceDynamics {
  std::vector<double> probs;  // (s*A+a)*S + s'
  std::vector<double> jac;    // empty when the kernel is L-independent
};

SliceDynamics eval_dynamics(const GameSpec& spec, int t, std::span<const double> lt,
                            bool with_jac) {
  const int S = spec.num_states, A = spec.num_actions;
  const int SA = S * A;
  SliceDynamics dyn;
  dyn.probs.assign(static_cast<size_t>(SA) * S, 0.0);
  if (with_jac && spec.transition_jac) {
    dyn.jac.assign(static_cast<size_t>(SA) * S * SA, 0.0);
  }
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const int sa = s * A + a;
      spec.transition(t, s, a, lt, std::span<double>(dyn.probs.data() + sa * S, S));
      if (!dyn.jac.empty()) {
        spec.transition_jac(t, s, a, lt,
                            std::span<double>(dyn.jac.data() + static_cast<size_t>(sa) * S * SA,
                                              static_cast<size_t>(S) * SA));
      }
    }
  }
  return dyn;
}

}  // namespace

double z_budget(const GameSpec& spec) {
  const double T = spec.horizon;
  return spec.num_states * spec.num_actions * (T * T + T + 2) * spec.reward_bound;
}

double y_radius(const GameSpec& spec) {
  const double T = spec.horizon;
  return spec.num_states * (T + 1) * (T + 2) * spec.reward_bound / 2.0;
}

void Weights::validate() const {
  if (lambda1 < 0.0 || lambda2 < 0.0 || rho1 < 0.0 || rho2 < 0.0) {
    throw GameError("Weights: negative weight");
  }
  if (lambda1 == 0.0 && lambda2 == 0.0 && rho1 == 0.0 && rho2 == 0.0) {
    throw GameError("Weights: all weights zero");
  }
}

double consistency_residual(const GameSpec& spec, const FlowTable& d) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  double g = 0.0;
  for (int s = 0; s < S; ++s) {
    double row = 0.0;
    for (int a = 0; a < A; ++a) row += d.at(0, s, a);
    const double e = row - spec.initial_dist[s];
    g += e * e;
  }
  std::vector<double> probs(S);
  for (int t = 0; t < T; ++t) {
    auto lt = d.slice(t);
    std::vector<double> pushed(S, 0.0);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double m = d.at(t, s, a);
        spec.transition(t, s, a, lt, probs);
        for (int sp = 0; sp < S; ++sp) pushed[sp] += m * probs[sp];
      }
    }
    for (int sp = 0; sp < S; ++sp) {
      double row = 0.0;
      for (int a = 0; a < A; ++a) row += d.at(t + 1, sp, a);
      const double e = row - pushed[sp];
      g += e * e;
    }
  }
  return g;
}

double best_response_residual(const GameSpec& spec, std::span<const double> y,
                              std::span<const double> z, const FlowTable& d) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  if (static_cast<int>(y.size()) != S * (T + 1) ||
      static_cast<int>(z.size()) != S * A * (T + 1)) {
    throw GameError("best_response_residual: shape mismatch");
  }
  auto yat = [&](int t, int s) { return y[t * S + s]; };
  auto zat = [&](int t, int s, int a) { return z[(t * S + s) * A + a]; };

  double h = 0.0;
  std::vector<double> probs(S);
  if (T >= 1) {
    auto lT = d.slice(T);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const double u = yat(T - 1, s) - spec.reward(T, s, a, lT) - zat(T, s, a);
        h += u * u;
      }
    }
    for (int t = 0; t <= T - 2; ++t) {
      auto lt1 = d.slice(t + 1);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          double u = yat(t, s) - spec.reward(t + 1, s, a, lt1) - zat(t + 1, s, a);
          spec.transition(t + 1, s, a, lt1, probs);
          for (int sp = 0; sp < S; ++sp) u -= probs[sp] * yat(t + 1, sp);
          h += u * u;
        }
      }
    }
  }
  auto l0 = d.slice(0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double u = yat(T, s) + spec.reward(0, s, a, l0) + zat(0, s, a);
      spec.transition(0, s, a, l0, probs);
      for (int sp = 0; sp < S; ++sp) u += probs[sp] * yat(0, sp);
      h += u * u;
    }
  }
  return h;
}

double objective(const GameSpec& spec, const OmoIterate& it, const Weights& w) {
  double f = w.lambda2 * dot(it.z, it.d.mass) +
             w.rho1 * consistency_residual(spec, it.d) +
             w.rho2 * best_response_residual(spec, it.y, it.z, it.d);
  if (w.lambda1 != 0.0) {
    f -= w.lambda1 * social_value(spec, it.d).welfare;
  }
  return f;
}

Gradient gradient(const GameSpec& spec, const OmoIterate& it, const Weights& w) {
  if (!spec.smooth) {
    throw GameError("gradient: environment declares itself non-smooth");
  }
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  const int SA = S * A, K = spec.num_metrics;
  const FlowTable& d = it.d;

  Gradient g;
  g.y.assign(static_cast<size_t>(S) * (T + 1), 0.0);
  g.z.assign(static_cast<size_t>(SA) * (T + 1), 0.0);
  g.d.assign(static_cast<size_t>(SA) * (T + 1), 0.0);

  auto yat = [&](int t, int s) { return it.y[t * S + s]; };
  auto zat = [&](int t, int s, int a) { return it.z[(t * S + s) * A + a]; };
  auto didx = [&](int t, int s, int a) { return (t * S + s) * A + a; };

  std::vector<SliceDynamics> dyn(T + 1);
  for (int t = 0; t <= T; ++t) dyn[t] = eval_dynamics(spec, t, d.slice(t), true);
  auto pat = [&](int t, int s, int a, int sp) { return dyn[t].probs[(s * A + a) * S + sp]; };
  auto jat = [&](int t, int s, int a, int sp, int i) {
    return dyn[t].jac.empty()
               ? 0.0
               : dyn[t].jac[(static_cast<size_t>(s) * A + a) * S * SA + static_cast<size_t>(sp) * SA + i];
  };
  const bool has_jac = static_cast<bool>(spec.transition_jac);

  std::vector<double> rgrad(SA);
  auto reward_grad_at = [&](int t, int s, int a, std::span<const double> lt) {
    if (spec.reward_grad) {
      spec.reward_grad(t, s, a, lt, rgrad);
    } else {
      std::fill(rgrad.begin(), rgrad.end(), 0.0);
    }
  };

  // -lambda1 V(d): chain through the link function and the flow-weighted
  // metric sums.
  if (w.lambda1 != 0.0 && K > 0) {
    const SocialValue sv = social_value(spec, d);
    std::vector<double> fk(K);
    if (!spec.link_grad) throw GameError("gradient: link_grad missing");
    spec.link_grad(sv.metrics, fk);
    std::vector<double> mgrad(SA);
    for (int t = 0; t <= T; ++t) {
      auto lt = d.slice(t);
      for (int k = 0; k < K; ++k) {
        const double c = -w.lambda1 * fk[k];
        if (c == 0.0) continue;
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            g.d[didx(t, s, a)] += c * spec.social_metric(k, t, s, a, lt);
            if (spec.metric_grad) {
              const double m = d.at(t, s, a);
              if (m != 0.0) {
                spec.metric_grad(k, t, s, a, lt, mgrad);
                for (int i = 0; i < SA; ++i) g.d[t * SA + i] += c * m * mgrad[i];
              }
            }
          }
        }
      }
    }
  }

  // lambda2 z'd.
  for (size_t i = 0; i < g.z.size(); ++i) {
    g.z[i] += w.lambda2 * d.mass[i];
    g.d[i] += w.lambda2 * it.z[i];
  }

  // rho1 g^CS(d).
  if (w.rho1 != 0.0) {
    for (int s = 0; s < S; ++s) {
      double row = 0.0;
      for (int a = 0; a < A; ++a) row += d.at(0, s, a);
      const double e = row - spec.initial_dist[s];
      for (int a = 0; a < A; ++a) g.d[didx(0, s, a)] += w.rho1 * 2.0 * e;
    }
    for (int t = 0; t < T; ++t) {
      std::vector<double> pushed(S, 0.0);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double m = d.at(t, s, a);
          for (int sp = 0; sp < S; ++sp) pushed[sp] += m * pat(t, s, a, sp);
        }
      }
      for (int sp = 0; sp < S; ++sp) {
        double row = 0.0;
        for (int a = 0; a < A; ++a) row += d.at(t + 1, sp, a);
        const double e = row - pushed[sp];
        const double c = w.rho1 * 2.0 * e;
        for (int a = 0; a < A; ++a) g.d[didx(t + 1, sp, a)] += c;
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            g.d[didx(t, s, a)] -= c * pat(t, s, a, sp);
          }
        }
        // The kernel's own dependence on the slice adds a jacobian term.
        if (has_jac) {
          for (int i = 0; i < SA; ++i) {
            double acc = 0.0;
            for (int s = 0; s < S; ++s) {
              for (int a = 0; a < A; ++a) {
                acc += d.at(t, s, a) * jat(t, s, a, sp, i);
              }
            }
            g.d[t * SA + i] -= c * acc;
          }
        }
      }
    }
  }

  // rho2 h^BR(y,z,d).
  if (w.rho2 != 0.0) {
    const double r2 = w.rho2;
    if (T >= 1) {
      auto lT = d.slice(T);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double u = yat(T - 1, s) - spec.reward(T, s, a, lT) - zat(T, s, a);
          g.y[(T - 1) * S + s] += r2 * 2.0 * u;
          g.z[didx(T, s, a)] -= r2 * 2.0 * u;
          reward_grad_at(T, s, a, lT);
          for (int i = 0; i < SA; ++i) g.d[T * SA + i] -= r2 * 2.0 * u * rgrad[i];
        }
      }
      for (int t = 0; t <= T - 2; ++t) {
        auto lt1 = d.slice(t + 1);
        for (int s = 0; s < S; ++s) {
          for (int a = 0; a < A; ++a) {
            double u = yat(t, s) - spec.reward(t + 1, s, a, lt1) - zat(t + 1, s, a);
            for (int sp = 0; sp < S; ++sp) u -= pat(t + 1, s, a, sp) * yat(t + 1, sp);
            const double c = r2 * 2.0 * u;
            g.y[t * S + s] += c;
            for (int sp = 0; sp < S; ++sp) g.y[(t + 1) * S + sp] -= c * pat(t + 1, s, a, sp);
            g.z[didx(t + 1, s, a)] -= c;
            reward_grad_at(t + 1, s, a, lt1);
            for (int i = 0; i < SA; ++i) {
              double di = -rgrad[i];
              if (has_jac) {
                for (int sp = 0; sp < S; ++sp) di -= jat(t + 1, s, a, sp, i) * yat(t + 1, sp);
              }
              g.d[(t + 1) * SA + i] += c * di;
            }
          }
        }
      }
    }
    auto l0 = d.slice(0);
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        double u = yat(T, s) + spec.reward(0, s, a, l0) + zat(0, s, a);
        for (int sp = 0; sp < S; ++sp) u += pat(0, s, a, sp) * yat(0, sp);
        const double c = r2 * 2.0 * u;
        g.y[T * S + s] += c;
        for (int sp = 0; sp < S; ++sp) g.y[sp] += c * pat(0, s, a, sp);
        g.z[didx(0, s, a)] += c;
        reward_grad_at(0, s, a, l0);
        for (int i = 0; i < SA; ++i) {
          double di = rgrad[i];
          if (has_jac) {
            for (int sp = 0; sp < S; ++sp) di += jat(0, s, a, sp, i) * yat(0, sp);
          }
          g.d[i] += c * di;
        }
      }
    }
  }
  return g;
}

void project_simplex(std::span<double> x, double total) {
  const size_t n = x.size();
  std::vector<double> u(x.begin(), x.end());
  std::sort(u.begin(), u.end(), std::greater<>());
  double csum = 0.0, tau = 0.0;
  size_t rho = 0;
  for (size_t i = 0; i < n; ++i) {
    csum += u[i];
    const double t = (csum - total) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      tau = t;
    }
  }
  for (size_t i = 0; i < n; ++i) x[i] = std::max(x[i] - tau, 0.0);
  (void)rho;
}

FlowTable project_d(const FlowTable& d_raw) {
  FlowTable d = d_raw;
  for (int t = 0; t <= d.horizon; ++t) project_simplex(d.slice(t));
  return d;
}

std::vector<double> project_z(std::span<const double> z_raw, double budget) {
  std::vector<double> z(z_raw.begin(), z_raw.end());
  double clipped_sum = 0.0;
  for (double& v : z) clipped_sum += std::max(v, 0.0);
  if (clipped_sum <= budget) {
    for (double& v : z) v = std::max(v, 0.0);
  } else {
    project_simplex(z, budget);
  }
  return z;
}

std::vector<double> project_y(std::span<const double> y_raw, double radius) {
  std::vector<double> y(y_raw.begin(), y_raw.end());
  const double n = norm2(y);
  if (n > radius) {
    const double scale = radius / n;
    for (double& v : y) v *= scale;
  }
  return y;
}

namespace {

OmoIterate initial_iterate(const GameSpec& spec, const SolverConfig& cfg) {
  const int S = spec.num_states, A = spec.num_actions, T = spec.horizon;
  OmoIterate it;
  it.y.assign(static_cast<size_t>(S) * (T + 1), 0.0);
  it.z.assign(static_cast<size_t>(S) * A * (T + 1), 0.0);
  if (cfg.init_mode == InitMode::kRandom) {
    std::mt19937_64 rng(cfg.seed);
    std::exponential_distribution<double> exp_dist(1.0);
    it.d = FlowTable(T, S, A);
    for (int t = 0; t <= T; ++t) {
      auto sl = it.d.slice(t);
      double sum = 0.0;
      for (double& v : sl) {
        v = exp_dist(rng);
        sum += v;
      }
      for (double& v : sl) v /= sum;
    }
  } else {
    it.d = propagate_flow(spec, Policy::uniform(T, S, A));
  }
  return it;
}

double safe_objective(const GameSpec& spec, const OmoIterate& it, const Weights& w) {
  try {
    return objective(spec, it, w);
  } catch (const EvaluatorDomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

OmoIterate projected_step(const OmoIterate& from, const Gradient& g, double step,
                          double budget, double radius) {
  OmoIterate cand;
  cand.y.resize(from.y.size());
  for (size_t i = 0; i < cand.y.size(); ++i) cand.y[i] = from.y[i] - step * g.y[i];
  cand.y = project_y(cand.y, radius);
  cand.z.resize(from.z.size());
  for (size_t i = 0; i < cand.z.size(); ++i) cand.z[i] = from.z[i] - step * g.z[i];
  cand.z = project_z(cand.z, budget);
  cand.d = from.d;
  for (size_t i = 0; i < cand.d.mass.size(); ++i) cand.d.mass[i] -= step * g.d[i];
  cand.d = project_d(cand.d);
  return cand;
}

}  // namespace

SolveResult solve(const GameSpec& spec, const Weights& w, const SolverConfig& cfg,
                  std::optional<OmoIterate> warm) {
  spec.validate();
  w.validate();
  if (cfg.max_iters < 1 || cfg.step_size <= 0.0) {
    throw GameError("SolverConfig: max_iters >= 1 and step_size > 0 required");
  }

  const double budget = z_budget(spec);
  const double radius = y_radius(spec);

  SolveResult res;
  if (cfg.init_mode == InitMode::kWarmStart) {
    if (!warm) throw GameError("solve: warm_start requested without an iterate");
    res.iterate = std::move(*warm);
    res.iterate.y = project_y(res.iterate.y, radius);
    res.iterate.z = project_z(res.iterate.z, budget);
    res.iterate.d = project_d(res.iterate.d);
  } else {
    res.iterate = initial_iterate(spec, cfg);
  }

  double f_cur = safe_objective(spec, res.iterate, w);
  if (std::isnan(f_cur)) {
    res.status = SolveStatus::kNonFinite;
    return res;
  }

  // Projected gradient descent with Nesterov momentum and adaptive restart:
  // the gradient is taken at an extrapolated point, and whenever that step
  // would increase the objective the momentum is reset and a plain step is
  // backtracked from the base step. The objective trace stays non-increasing.
  OmoIterate look = res.iterate;
  double t_mom = 1.0;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Gradient grad = gradient(spec, look, w);
    double step = cfg.step_size;
    OmoIterate cand = projected_step(look, grad, step, budget, radius);
    double f_new = safe_objective(spec, cand, w);
    bool accepted = !std::isnan(f_new) && f_new <= f_cur + kDescentSlack;
    if (!std::isnan(f_new) && !accepted) {
      // Restart momentum and backtrack a plain descent step.
      t_mom = 1.0;
      look = res.iterate;
      grad = gradient(spec, look, w);
      while (true) {
        cand = projected_step(look, grad, step, budget, radius);
        f_new = safe_objective(spec, cand, w);
        if (std::isnan(f_new)) break;
        if (f_new <= f_cur + kDescentSlack) {
          accepted = true;
          break;
        }
        if (step <= kMinStep) break;
        step *= 0.5;
      }
    }
    if (std::isnan(f_new)) {
      // Abort with a snapshot of the offending iterate.
      res.iterate = std::move(cand);
      res.status = SolveStatus::kNonFinite;
      res.iterations = iter;
      res.final_step = step;
      return res;
    }
    if (!accepted) {
      // Stalled: no descent direction at the minimum step.
      res.status = SolveStatus::kGradTol;
      res.iterations = iter - 1;
      res.final_step = step;
      return res;
    }

    double move = 0.0;
    for (size_t i = 0; i < cand.y.size(); ++i) {
      const double dv = cand.y[i] - res.iterate.y[i];
      move += dv * dv;
    }
    for (size_t i = 0; i < cand.z.size(); ++i) {
      const double dv = cand.z[i] - res.iterate.z[i];
      move += dv * dv;
    }
    for (size_t i = 0; i < cand.d.mass.size(); ++i) {
      const double dv = cand.d.mass[i] - res.iterate.d.mass[i];
      move += dv * dv;
    }
    const double pg_norm = std::sqrt(move) / step;

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    const double beta = (t_mom - 1.0) / t_next;
    look.y.resize(cand.y.size());
    look.z.resize(cand.z.size());
    look.d = cand.d;
    for (size_t i = 0; i < cand.y.size(); ++i)
      look.y[i] = cand.y[i] + beta * (cand.y[i] - res.iterate.y[i]);
    for (size_t i = 0; i < cand.z.size(); ++i)
      look.z[i] = cand.z[i] + beta * (cand.z[i] - res.iterate.z[i]);
    for (size_t i = 0; i < cand.d.mass.size(); ++i)
      look.d.mass[i] = cand.d.mass[i] + beta * (cand.d.mass[i] - res.iterate.d.mass[i]);
    t_mom = t_next;

    res.iterate = std::move(cand);
    f_cur = f_new;
    res.iterations = iter;
    res.final_step = step;

    IterationStats st;
    st.objective = f_new;
    st.g_cs = consistency_residual(spec, res.iterate.d);
    st.h_br = best_response_residual(spec, res.iterate.y, res.iterate.z, res.iterate.d);
    st.comp = dot(res.iterate.z, res.iterate.d.mass);
    res.trace.push_back(st);

    if (cfg.grad_tol > 0.0 && pg_norm <= cfg.grad_tol) {
      res.status = SolveStatus::kGradTol;
      return res;
    }
  }
  res.status = SolveStatus::kMaxIters;
  return res;
}

double default_slack_constant(const GameSpec& spec) {
  return 10.0 * spec.reward_bound * spec.num_states * spec.num_actions * (spec.horizon + 1);
}

ComplementarityReport complementarity_check(const OmoIterate& it, const GameSpec& spec,
                                            double slack_constant) {
  if (slack_constant < 0.0) slack_constant = default_slack_constant(spec);
  ComplementarityReport rep;
  rep.comp = dot(it.z, it.d.mass);
  rep.g_cs = consistency_residual(spec, it.d);
  rep.h_br = best_response_residual(spec, it.y, it.z, it.d);
  rep.expl = exploitability(spec, retrieve_policy(it.d));
  rep.slack = slack_constant * (std::sqrt(rep.g_cs) + std::sqrt(rep.h_br));
  rep.bound_satisfied = rep.comp + rep.slack >= rep.expl;
  return rep;
}

}  // namespace mfg::omo
