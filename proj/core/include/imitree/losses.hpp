#pragma once

#include <string>

#include <Eigen/Dense>

#include "imitree/batch.hpp"
#include "imitree/model.hpp"
#include "imitree/reanalyze.hpp"
#include "imitree/rng.hpp"

namespace imitree {

struct LossWeights {
  double policy = 1.0;
  double value = 1.0;
  double consistency = 2.0;
  double disc = 0.1;
  double gradient_penalty = 1.0;
  double bc = 0.01;
  /// Keep discriminator gradients out of the representation and dynamics.
  bool detach_disc_encoder = false;

  void validate() const;
};

/// Unweighted components as logged; `total` is their weighted sum.
struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double consistency = 0.0;
  double disc = 0.0;
  double gradient_penalty = 0.0;
  double bc = 0.0;

  double weighted_sum(const LossWeights& w) const;
};

struct LossResult {
  LossBreakdown parts;
  ModelGrads grads;
};

/// Mean over valid expert (row, position) pairs of -log pi_BC(a_{t+i} | h_{t+i})
/// with h unrolled through the dynamics.
double multi_step_bc_loss(const ModelBundle& m, const UnrollBatch& expert);

/// Policy and value terms: sum over positions, mean over rows (agent and
/// expert rows pooled). Consistency: positions i >= 1, same reduction.
/// Discriminator, penalty and BC: means as in their own functions.
/// `gp_mix` holds one interpolation coefficient per matched step-0 row.
/// Throws RuntimeError naming the first non-finite component.
LossResult total_loss(const ModelBundle& m, const UnrollBatch& agent, const TargetBatch& agent_targets,
                      const UnrollBatch& expert, const TargetBatch& expert_targets, const LossWeights& w,
                      const Eigen::VectorXd& gp_mix);

/// Convenience form drawing the interpolation coefficients from `stream`.
LossResult total_loss(const ModelBundle& m, const UnrollBatch& agent, const TargetBatch& agent_targets,
                      const UnrollBatch& expert, const TargetBatch& expert_targets, const LossWeights& w,
                      RandomStream& stream);

/// Behavior cloning alone on single expert transitions (no unroll); used by
/// the BC baseline.
LossResult bc_only_loss(const ModelBundle& m, const UnrollBatch& expert);

}  // namespace imitree
