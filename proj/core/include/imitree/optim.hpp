#pragma once

#include <span>

#include "imitree/mlp.hpp"

namespace imitree::nn {

struct SgdConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double max_grad_norm = 10.0;

  void validate() const;
};

double global_norm(std::span<const GradientSet* const> sets);

/// Rescales every set by max_norm/g when the joint L2 norm g exceeds
/// max_norm. Returns the pre-clip norm. Throws on non-finite entries.
double clip_global_norm(std::span<GradientSet* const> sets, double max_norm);

/// Single-set convenience form.
GradientSet grad_norm_clip(GradientSet grads, double max_norm);

/// Classical momentum with coupled weight decay:
///   v <- momentum * v + (grad + weight_decay * param)
///   param <- param - learning_rate * v
void sgd_momentum_step(Mlp& net, const GradientSet& grads, GradientSet& velocity, const SgdConfig& cfg);

}  // namespace imitree::nn
