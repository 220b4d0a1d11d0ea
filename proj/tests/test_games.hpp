#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "mfg/game.hpp"

// Small synthetic games shared across test suites.
namespace mfg::testing {

// L-independent game: random row-stochastic kernel, random rewards in
// [-1,1], one social metric equal to the reward, identity link.
inline GameSpec random_decoupled_game(int S, int A, int T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  auto kernel = std::make_shared<std::vector<double>>();  // (t,s,a,s')
  kernel->resize(static_cast<size_t>(T + 1) * S * A * S);
  auto rewards = std::make_shared<std::vector<double>>();
  rewards->resize(static_cast<size_t>(T + 1) * S * A);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const size_t base = ((static_cast<size_t>(t) * S + s) * A + a) * S;
        double sum = 0.0;
        for (int sp = 0; sp < S; ++sp) {
          (*kernel)[base + sp] = 0.05 + unif(rng);
          sum += (*kernel)[base + sp];
        }
        for (int sp = 0; sp < S; ++sp) (*kernel)[base + sp] /= sum;
        (*rewards)[(static_cast<size_t>(t) * S + s) * A + a] = 2.0 * unif(rng) - 1.0;
      }
    }
  }
  std::vector<double> mu0(S);
  double musum = 0.0;
  for (int s = 0; s < S; ++s) {
    mu0[s] = 0.1 + unif(rng);
    musum += mu0[s];
  }
  for (double& m : mu0) m /= musum;

  GameSpec spec;
  spec.num_states = S;
  spec.num_actions = A;
  spec.horizon = T;
  spec.initial_dist = mu0;
  spec.reward_bound = 1.0;
  spec.smooth = true;
  spec.transition = [kernel, S, A](int t, int s, int a, std::span<const double>,
                                   std::span<double> out) {
    const size_t base = ((static_cast<size_t>(t) * S + s) * A + a) * S;
    for (int sp = 0; sp < S; ++sp) out[sp] = (*kernel)[base + sp];
  };
  spec.reward = [rewards, S, A](int t, int s, int a, std::span<const double>) {
    return (*rewards)[(static_cast<size_t>(t) * S + s) * A + a];
  };
  spec.num_metrics = 1;
  spec.social_metric = [rewards, S, A](int, int t, int s, int a, std::span<const double>) {
    return (*rewards)[(static_cast<size_t>(t) * S + s) * A + a];
  };
  spec.link = [](std::span<const double> v) { return v[0]; };
  spec.link_grad = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  return spec;
}

// Mean-field-coupled smooth game with analytic derivatives: the kernel mixes
// a fixed row-stochastic base with the state marginal of L, and rewards are
// quadratic in the slice entries.
inline GameSpec smooth_coupled_game(int S, int A, int T, std::uint64_t seed,
                                    double mix = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int SA = S * A;

  auto base_kernel = std::make_shared<std::vector<double>>(static_cast<size_t>(S) * A * S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      double sum = 0.0;
      const size_t b = (static_cast<size_t>(s) * A + a) * S;
      for (int sp = 0; sp < S; ++sp) {
        (*base_kernel)[b + sp] = 0.05 + unif(rng);
        sum += (*base_kernel)[b + sp];
      }
      for (int sp = 0; sp < S; ++sp) (*base_kernel)[b + sp] /= sum;
    }
  }
  // r(s,a,L) = base(s,a) + sum_i lin(s,a,i) L_i + quad(s,a) * sum_i L_i^2.
  auto rbase = std::make_shared<std::vector<double>>(SA);
  auto rlin = std::make_shared<std::vector<double>>(static_cast<size_t>(SA) * SA);
  auto rquad = std::make_shared<std::vector<double>>(SA);
  for (int i = 0; i < SA; ++i) {
    (*rbase)[i] = 2.0 * unif(rng) - 1.0;
    (*rquad)[i] = unif(rng) - 0.5;
    for (int j = 0; j < SA; ++j) (*rlin)[static_cast<size_t>(i) * SA + j] = unif(rng) - 0.5;
  }
  std::vector<double> mu0(S, 1.0 / S);

  GameSpec spec;
  spec.num_states = S;
  spec.num_actions = A;
  spec.horizon = T;
  spec.initial_dist = mu0;
  spec.reward_bound = 4.0;  // |base| + |lin|_1 + |quad| is safely below this
  spec.smooth = true;

  spec.transition = [base_kernel, S, A, mix](int, int s, int a,
                                             std::span<const double> lt,
                                             std::span<double> out) {
    const size_t b = (static_cast<size_t>(s) * A + a) * S;
    for (int sp = 0; sp < S; ++sp) {
      double marg = 0.0;
      for (int ap = 0; ap < A; ++ap) marg += lt[sp * A + ap];
      out[sp] = (1.0 - mix) * (*base_kernel)[b + sp] + mix * marg;
    }
  };
  spec.transition_jac = [S, A, mix](int, int, int, std::span<const double>,
                                    std::span<double> out) {
    const int SA2 = S * A;
    std::fill(out.begin(), out.end(), 0.0);
    for (int sp = 0; sp < S; ++sp) {
      for (int ap = 0; ap < A; ++ap) {
        out[static_cast<size_t>(sp) * SA2 + sp * A + ap] = mix;
      }
    }
  };
  spec.reward = [rbase, rlin, rquad, A, SA](int, int s, int a,
                                            std::span<const double> lt) {
    const int i = s * A + a;
    double r = (*rbase)[i];
    double sq = 0.0;
    for (int j = 0; j < SA; ++j) {
      r += (*rlin)[static_cast<size_t>(i) * SA + j] * lt[j];
      sq += lt[j] * lt[j];
    }
    return r + (*rquad)[i] * sq;
  };
  spec.reward_grad = [rlin, rquad, A, SA](int, int s, int a, std::span<const double> lt,
                                          std::span<double> out) {
    const int i = s * A + a;
    for (int j = 0; j < SA; ++j) {
      out[j] = (*rlin)[static_cast<size_t>(i) * SA + j] + 2.0 * (*rquad)[i] * lt[j];
    }
  };
  spec.num_metrics = 2;
  spec.social_metric = [rbase, rlin, A, SA](int k, int, int s, int a,
                                            std::span<const double> lt) {
    const int i = s * A + a;
    if (k == 0) return (*rbase)[i];
    double v = 0.0;
    for (int j = 0; j < SA; ++j) v += (*rlin)[static_cast<size_t>(i) * SA + j] * lt[j];
    return v;
  };
  spec.metric_grad = [rlin, A, SA](int k, int, int s, int a, std::span<const double>,
                                   std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    if (k == 1) {
      const int i = s * A + a;
      for (int j = 0; j < SA; ++j) out[j] = (*rlin)[static_cast<size_t>(i) * SA + j];
    }
  };
  spec.link = [](std::span<const double> v) { return v[0] + 0.5 * v[1] * v[1]; };
  spec.link_grad = [](std::span<const double> v, std::span<double> out) {
    out[0] = 1.0;
    out[1] = v[1];
  };
  return spec;
}

// Random stochastic policy.
inline Policy random_policy(int T, int S, int A, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  Policy pi(T, S, A);
  for (int t = 0; t <= T; ++t) {
    for (int s = 0; s < S; ++s) {
      double sum = 0.0;
      for (int a = 0; a < A; ++a) {
        pi.at(t, s, a) = unif(rng);
        sum += pi.at(t, s, a);
      }
      for (int a = 0; a < A; ++a) pi.at(t, s, a) /= sum;
    }
  }
  return pi;
}

}  // namespace mfg::testing
