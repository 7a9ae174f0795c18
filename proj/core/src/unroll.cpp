#include "imitree/unroll.hpp"

#include "imitree/error.hpp"

namespace imitree {

void UnrollBatch::validate() const {
  const int n = unroll_steps;
  if (n < 0) throw InvalidArgument("UnrollBatch: negative unroll length");
  if (observations.size() != static_cast<std::size_t>(n + 2) || actions.size() != static_cast<std::size_t>(n + 1)) {
    throw InvalidArgument("UnrollBatch: expected n+2 observation and n+1 action blocks");
  }
  const Eigen::Index b = observations.front().cols();
  if (b < 1) throw InvalidArgument("UnrollBatch: empty batch");
  for (const auto& o : observations)
    if (o.cols() != b || o.rows() != observations.front().rows()) throw InvalidArgument("UnrollBatch: ragged observations");
  for (const auto& a : actions) {
    if (a.cols() != b || a.rows() != actions.front().rows()) throw InvalidArgument("UnrollBatch: ragged actions");
    if (!(a.array().abs() <= 1.0).all()) throw InvalidArgument("UnrollBatch: action outside [-1, 1]");
  }
  if (mask.rows() != n + 1 || mask.cols() != b) throw InvalidArgument("UnrollBatch: mask shape mismatch");
  if (!rows.empty() && rows.size() != static_cast<std::size_t>(b)) throw InvalidArgument("UnrollBatch: row refs");
}

Eigen::MatrixXd stack_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  if (top.cols() != bottom.cols()) throw InvalidArgument("stack_rows: column mismatch");
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Unroll unroll_latents(const ModelBundle& model, const UnrollBatch& batch) {
  batch.validate();
  const int n = batch.unroll_steps;
  Unroll u;
  u.latents.resize(static_cast<std::size_t>(n + 1));
  u.dynamics_tapes.resize(static_cast<std::size_t>(n));
  u.latents[0] = model.net(Net::kRepresentation).forward(batch.observations[0], &u.representation_tape);
  for (int i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    u.latents[k + 1] = model.net(Net::kDynamics).forward(stack_rows(u.latents[k], batch.actions[k]), &u.dynamics_tapes[k]);
    if (!u.latents[k + 1].allFinite()) {
      throw RuntimeError("unroll: non-finite latent state at step " + std::to_string(i + 1));
    }
  }
  u.d_latents.reserve(u.latents.size());
  for (const auto& h : u.latents) u.d_latents.push_back(Eigen::MatrixXd::Zero(h.rows(), h.cols()));
  return u;
}

void backprop_unroll(const ModelBundle& model, const Unroll& unroll, ModelGrads& grads) {
  const int latent = model.config().latent_dim;
  Eigen::MatrixXd carry = unroll.d_latents.back();
  for (std::size_t k = unroll.dynamics_tapes.size(); k-- > 0;) {
    const Eigen::MatrixXd dx = model.net(Net::kDynamics).backward(unroll.dynamics_tapes[k], carry, grads[Net::kDynamics]);
    carry = unroll.d_latents[k] + dx.topRows(latent);
  }
  model.net(Net::kRepresentation).backward(unroll.representation_tape, carry, grads[Net::kRepresentation]);
}

}  // namespace imitree
