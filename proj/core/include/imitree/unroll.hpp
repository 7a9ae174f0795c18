#pragma once

#include <vector>

#include <Eigen/Dense>

#include "imitree/batch.hpp"
#include "imitree/model.hpp"

namespace imitree {

/// Batched h_0 = f(s_t), h_{i+1} = g(h_i, a_{t+i}) with everything needed to
/// push latent cotangents back into f and g.
struct Unroll {
  std::vector<Eigen::MatrixXd> latents;    // i = 0..n, latent_dim x B
  std::vector<Eigen::MatrixXd> d_latents;  // accumulated cotangents
  nn::MlpTape representation_tape;
  std::vector<nn::MlpTape> dynamics_tapes;  // i = 0..n-1

  int positions() const { return static_cast<int>(latents.size()); }
};

Unroll unroll_latents(const ModelBundle& model, const UnrollBatch& batch);

/// Consumes `d_latents` and accumulates into the representation and dynamics
/// gradients.
void backprop_unroll(const ModelBundle& model, const Unroll& unroll, ModelGrads& grads);

/// Concatenation [h; a] per column.
Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom);

}  // namespace imitree
