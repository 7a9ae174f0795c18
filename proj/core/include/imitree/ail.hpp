#pragma once

#include <Eigen/Dense>

#include "imitree/batch.hpp"
#include "imitree/model.hpp"
#include "imitree/rng.hpp"
#include "imitree/unroll.hpp"

namespace imitree::ail {

/// Largest reward a clamped discriminator can emit: -log(1e-6).
inline constexpr double kMaxReward = 13.815510557964274;

/// GAIL transition reward -log(1 - p); p is clamped to [1e-6, 1 - 1e-6].
double ail_reward(double p);

/// Discriminator loss over the model unroll of both batches, expert pairs
/// labelled 1 and agent pairs labelled 0:
///   mean(-log D(h^E_i, a^E_i)) + mean(-log(1 - D(h_i, a_i)))
/// over all valid positions i = 0..n. Throws with the position index on a
/// non-finite term.
double multi_step_disc_loss(const ModelBundle& m, const UnrollBatch& agent, const UnrollBatch& expert);

/// Mean over rows of (||grad_(h~, a~) D|| - 1)^2 at random interpolates of
/// matched step-0 expert and agent (latent, action) pairs.
double gradient_penalty(const ModelBundle& m, const UnrollBatch& agent, const UnrollBatch& expert,
                        RandomStream& stream);

/// ail_reward(D(f(obs), a)) with every network taken from the snapshot.
double bootstrap_reward(const TargetModel& target, const Eigen::VectorXd& obs, const Eigen::VectorXd& action);

// Gradient-carrying forms used by the joint objective. Each returns the
// unweighted loss and, when `grads` is set, accumulates `weight` times its
// gradient into `grads` (and into the unrolls' latent cotangents unless
// `detach_encoder`).

double disc_loss_terms(const ModelBundle& m, const UnrollBatch& agent, Unroll& agent_unroll,
                       const UnrollBatch& expert, Unroll& expert_unroll, ModelGrads* grads, double weight,
                       bool detach_encoder = false);

/// `mix` holds one interpolation coefficient per row (weight on the expert).
/// Interpolates are treated as inputs: only the discriminator receives
/// gradient.
double gradient_penalty_terms(const ModelBundle& m, const UnrollBatch& agent, const Unroll& agent_unroll,
                              const UnrollBatch& expert, const Unroll& expert_unroll,
                              const Eigen::VectorXd& mix, ModelGrads* grads, double weight);

}  // namespace imitree::ail
