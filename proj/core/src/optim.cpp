#include "imitree/optim.hpp"

#include <cmath>

#include "imitree/error.hpp"

namespace imitree::nn {

void SgdConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("SgdConfig: learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("SgdConfig: momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw InvalidArgument("SgdConfig: weight_decay must be >= 0");
  if (!(max_grad_norm > 0.0)) throw InvalidArgument("SgdConfig: max_grad_norm must be > 0");
}

double global_norm(std::span<const GradientSet* const> sets) {
  double s = 0.0;
  for (const GradientSet* g : sets) s += g->squared_norm();
  return std::sqrt(s);
}

double clip_global_norm(std::span<GradientSet* const> sets, double max_norm) {
  if (!(max_norm > 0.0)) throw InvalidArgument("clip_global_norm: max_norm must be > 0");
  double s = 0.0;
  for (GradientSet* g : sets) {
    if (!g->all_finite()) throw RuntimeError("clip_global_norm: non-finite gradient entry");
    s += g->squared_norm();
  }
  const double norm = std::sqrt(s);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (GradientSet* g : sets) g->scale(factor);
  }
  return norm;
}

GradientSet grad_norm_clip(GradientSet grads, double max_norm) {
  GradientSet* one[] = {&grads};
  clip_global_norm(one, max_norm);
  return grads;
}

void sgd_momentum_step(Mlp& net, const GradientSet& grads, GradientSet& velocity, const SgdConfig& cfg) {
  if (!grads.matches(net) || !velocity.matches(net)) throw InvalidArgument("sgd_momentum_step: shape mismatch");
  auto& layers = net.mutable_layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& p = layers[i];
    auto& v = velocity.layers[i];
    const auto& g = grads.layers[i];
    v.weight = cfg.momentum * v.weight + g.weight + cfg.weight_decay * p.weight;
    v.bias = cfg.momentum * v.bias + g.bias + cfg.weight_decay * p.bias;
    p.weight -= cfg.learning_rate * v.weight;
    p.bias -= cfg.learning_rate * v.bias;
  }
}

}  // namespace imitree::nn
