#pragma once

#include <vector>

#include "imitree/reanalyze.hpp"
#include "imitree/replay.hpp"
#include "imitree/rng.hpp"

namespace imitree::test_support {

/// Trajectory of length T with uniform observations and actions inside
/// (-0.9, 0.9); env rewards are the step index.
inline Trajectory random_trajectory(Origin origin, int obs_dim, int act_dim, int length, std::uint64_t seed) {
  RandomStream s(seed);
  auto vec = [&](int d) {
    Eigen::VectorXd v(d);
    for (int i = 0; i < d; ++i) v(i) = s.uniform(-0.9, 0.9);
    return v;
  };
  Trajectory t(origin, seed, vec(obs_dim));
  for (int i = 0; i < length; ++i) t.append(vec(act_dim), vec(obs_dim), static_cast<double>(i));
  return t;
}

inline ReplayBuffer random_buffer(Origin origin, int obs_dim, int act_dim, std::vector<int> lengths,
                                  std::uint64_t seed) {
  ReplayBuffer b(origin);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    b.push(random_trajectory(origin, obs_dim, act_dim, lengths[i], seed * 1000 + i));
  }
  return b;
}

/// Targets with K random actions and normalized weights per position, value
/// targets drawn from [-3, 6]; mask copied from the batch.
inline TargetBatch random_targets(const UnrollBatch& batch, int act_dim, int k, std::uint64_t seed) {
  RandomStream s(seed);
  TargetBatch t;
  t.unroll_steps = batch.unroll_steps;
  t.batch_size = batch.batch_size();
  t.origin = batch.origin;
  const int P = batch.positions();
  const int B = batch.batch_size();
  t.value.resize(P, B);
  t.reward.resize(P, B);
  t.bootstrap.resize(P, B);
  t.root_value.resize(P, B);
  t.mask = batch.mask;
  t.terminal_bootstrap.assign(static_cast<std::size_t>(B), false);
  t.policy.resize(static_cast<std::size_t>(P * B));
  for (int i = 0; i < P; ++i) {
    for (int b = 0; b < B; ++b) {
      t.value(i, b) = s.uniform(-3.0, 6.0);
      t.reward(i, b) = 0.0;
      t.bootstrap(i, b) = 0.0;
      t.root_value(i, b) = 0.0;
      auto& pol = t.policy[static_cast<std::size_t>(i * B + b)];
      double sum = 0.0;
      for (int j = 0; j < k; ++j) {
        Eigen::VectorXd a(act_dim);
        for (int d = 0; d < act_dim; ++d) a(d) = s.uniform(-0.95, 0.95);
        const double w = s.uniform(0.05, 1.0);
        pol.push_back({a, w});
        sum += w;
      }
      for (auto& wa : pol) wa.weight /= sum;
    }
  }
  return t;
}

}  // namespace imitree::test_support
