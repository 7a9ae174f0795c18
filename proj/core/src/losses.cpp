#include "imitree/losses.hpp"

#include <cmath>

#include "imitree/ail.hpp"
#include "imitree/error.hpp"
#include "imitree/unroll.hpp"

namespace imitree {

void LossWeights::validate() const {
  if (policy < 0 || value < 0 || consistency < 0 || disc < 0 || gradient_penalty < 0 || bc < 0) {
    throw InvalidArgument("loss weights must be >= 0");
  }
}

double LossBreakdown::weighted_sum(const LossWeights& w) const {
  return w.policy * policy + w.value * value + w.consistency * consistency +
         w.disc * (disc + w.gradient_penalty * gradient_penalty) + w.bc * bc;
}

namespace {

// Latents of positions [first, n] side by side; column (i - first) * B + b.
Eigen::MatrixXd stack_positions(const std::vector<Eigen::MatrixXd>& per_position, std::size_t first) {
  const Eigen::Index b = per_position.front().cols();
  Eigen::MatrixXd out(per_position.front().rows(), static_cast<Eigen::Index>(per_position.size() - first) * b);
  for (std::size_t i = first; i < per_position.size(); ++i)
    out.middleCols(static_cast<Eigen::Index>(i - first) * b, b) = per_position[i];
  return out;
}

void scatter_positions(const Eigen::MatrixXd& d_stacked, std::vector<Eigen::MatrixXd>& d_latents, std::size_t first) {
  const Eigen::Index b = d_latents.front().cols();
  for (std::size_t i = first; i < d_latents.size(); ++i)
    d_latents[i] += d_stacked.middleCols(static_cast<Eigen::Index>(i - first) * b, b);
}

// d log pi / d head for one column; zero through the log_std clamp.
void head_gradient(const Eigen::VectorXd& head, const LogProbWithGrad& g, double scale, Eigen::Ref<Eigen::VectorXd> out) {
  const Eigen::Index d = g.d_mean.size();
  out.head(d) += scale * g.d_mean;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double raw = head(d + k);
    if (raw > kLogStdMin && raw < kLogStdMax) out(d + k) += scale * g.d_log_std(k);
  }
}

// Sum over valid positions of -sum_a w(a) log pi(a | h), scaled by `scale`
// into the gradient. Returns the unscaled sum.
double policy_terms(const ModelBundle& m, Unroll& u, const UnrollBatch& batch, const TargetBatch& targets,
                    ModelGrads& grads, double scale) {
  const auto& net = m.net(Net::kPolicy);
  const Eigen::MatrixXd h = stack_positions(u.latents, 0);
  nn::MlpTape tape;
  const Eigen::MatrixXd out = net.forward(h, &tape);
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  const int bsz = batch.batch_size();
  double total = 0.0;
  for (int i = 0; i < batch.positions(); ++i) {
    for (int b = 0; b < bsz; ++b) {
      if (batch.mask(i, b) <= 0.0) continue;
      const Eigen::Index c = static_cast<Eigen::Index>(i) * bsz + b;
      const Eigen::VectorXd head = out.col(c);
      const auto params = SquashedNormalParams::from_head(head);
      for (const auto& wa : targets.policy_at(i, b)) {
        if (wa.weight == 0.0) continue;
        const auto g = squashed_log_prob_grad(params, wa.action);
        total -= wa.weight * g.log_prob;
        head_gradient(head, g, -wa.weight * scale, dy.col(c));
      }
    }
  }
  const Eigen::MatrixXd dh = net.backward(tape, dy, grads[Net::kPolicy]);
  scatter_positions(dh, u.d_latents, 0);
  return total;
}

double value_terms(const ModelBundle& m, Unroll& u, const UnrollBatch& batch, const TargetBatch& targets,
                   ModelGrads& grads, double scale) {
  const auto& net = m.net(Net::kValue);
  const Eigen::MatrixXd h = stack_positions(u.latents, 0);
  nn::MlpTape tape;
  const Eigen::MatrixXd out = net.forward(h, &tape);
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  const int bsz = batch.batch_size();
  double total = 0.0;
  for (int i = 0; i < batch.positions(); ++i) {
    for (int b = 0; b < bsz; ++b) {
      if (batch.mask(i, b) <= 0.0) continue;
      const Eigen::Index c = static_cast<Eigen::Index>(i) * bsz + b;
      const Eigen::VectorXd target = encode_value_target(targets.value(i, b), m.support()).probs;
      const Eigen::VectorXd logits = out.col(c);
      total -= target.dot(log_softmax(logits));
      dy.col(c) = scale * (softmax(logits) - target);
    }
  }
  const Eigen::MatrixXd dh = net.backward(tape, dy, grads[Net::kValue]);
  scatter_positions(dh, u.d_latents, 0);
  return total;
}

// Positions i >= 1 whose observation s_{t+i} is real (a_{t+i-1} exists).
double consistency_terms(const ModelBundle& m, Unroll& u, const UnrollBatch& batch, ModelGrads& grads, double scale) {
  const int n = batch.unroll_steps;
  if (n < 1) return 0.0;
  const int bsz = batch.batch_size();
  const auto& proj = m.net(Net::kProjector);
  const auto& pred = m.net(Net::kPredictor);
  const Eigen::MatrixXd h = stack_positions(u.latents, 1);
  nn::MlpTape proj_tape, pred_tape;
  const Eigen::MatrixXd online = pred.forward(proj.forward(h, &proj_tape), &pred_tape);
  // Target branch: no tapes, no gradient.
  Eigen::MatrixXd next_obs(batch.observations[1].rows(), static_cast<Eigen::Index>(n) * bsz);
  for (int i = 1; i <= n; ++i)
    next_obs.middleCols(static_cast<Eigen::Index>(i - 1) * bsz, bsz) = batch.observations[static_cast<std::size_t>(i)];
  const Eigen::MatrixXd target = proj.forward(m.net(Net::kRepresentation).forward(next_obs));

  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(online.rows(), online.cols());
  double total = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int b = 0; b < bsz; ++b) {
      if (batch.mask(i - 1, b) <= 0.0) continue;
      const Eigen::Index c = static_cast<Eigen::Index>(i - 1) * bsz + b;
      const auto o = online.col(c);
      const auto t = target.col(c);
      const double no = o.norm();
      const double nt = t.norm();
      if (no == 0.0 || nt == 0.0) throw RuntimeError("consistency: zero-norm projection");
      const double cos = o.dot(t) / (no * nt);
      total -= cos;
      dy.col(c) = -scale * (t / (no * nt) - cos * o / (no * no));
    }
  }
  const Eigen::MatrixXd dp = pred.backward(pred_tape, dy, grads[Net::kPredictor]);
  const Eigen::MatrixXd dh = proj.backward(proj_tape, dp, grads[Net::kProjector]);
  scatter_positions(dh, u.d_latents, 1);
  return total;
}

// Mean -log pi_BC over valid positions; `weight` multiplies the gradient.
double bc_terms(const ModelBundle& m, Unroll& u, const UnrollBatch& batch, ModelGrads* grads, double weight) {
  const auto& net = m.net(Net::kBcPolicy);
  const Eigen::MatrixXd h = stack_positions(u.latents, 0);
  nn::MlpTape tape;
  const Eigen::MatrixXd out = net.forward(h, &tape);
  const int bsz = batch.batch_size();
  const double count = batch.mask.sum();
  if (count <= 0.0) throw InvalidArgument("BC loss: batch has no valid positions");
  Eigen::MatrixXd dy = Eigen::MatrixXd::Zero(out.rows(), out.cols());
  double total = 0.0;
  for (int i = 0; i < batch.positions(); ++i) {
    for (int b = 0; b < bsz; ++b) {
      if (batch.mask(i, b) <= 0.0) continue;
      const Eigen::Index c = static_cast<Eigen::Index>(i) * bsz + b;
      const Eigen::VectorXd head = out.col(c);
      const auto g = squashed_log_prob_grad(SquashedNormalParams::from_head(head),
                                            batch.actions[static_cast<std::size_t>(i)].col(b));
      total -= g.log_prob;
      head_gradient(head, g, -weight / count, dy.col(c));
    }
  }
  if (grads) {
    const Eigen::MatrixXd dh = net.backward(tape, dy, (*grads)[Net::kBcPolicy]);
    scatter_positions(dh, u.d_latents, 0);
  }
  return total / count;
}

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw RuntimeError(std::string("total loss: non-finite ") + name + " component");
}

void check_targets(const UnrollBatch& batch, const TargetBatch& t) {
  if (t.unroll_steps != batch.unroll_steps || t.batch_size != batch.batch_size()) {
    throw InvalidArgument("total loss: target batch does not match its unroll batch");
  }
}

}  // namespace

double multi_step_bc_loss(const ModelBundle& m, const UnrollBatch& expert) {
  if (expert.origin != Origin::kExpert) throw InvalidArgument("multi_step_bc_loss: expert rows only");
  Unroll u = unroll_latents(m, expert);
  return bc_terms(m, u, expert, nullptr, 0.0);
}

LossResult total_loss(const ModelBundle& m, const UnrollBatch& agent, const TargetBatch& agent_targets,
                      const UnrollBatch& expert, const TargetBatch& expert_targets, const LossWeights& w,
                      const Eigen::VectorXd& gp_mix) {
  w.validate();
  if (expert.origin != Origin::kExpert) throw InvalidArgument("total loss: expert batch has agent origin");
  check_targets(agent, agent_targets);
  check_targets(expert, expert_targets);
  LossResult r{{}, m.zero_grads()};
  Unroll ua = unroll_latents(m, agent);
  Unroll ue = unroll_latents(m, expert);
  const double rows = agent.batch_size() + expert.batch_size();

  auto& p = r.parts;
  p.policy = (policy_terms(m, ua, agent, agent_targets, r.grads, w.policy / rows) +
              policy_terms(m, ue, expert, expert_targets, r.grads, w.policy / rows)) /
             rows;
  require_finite(p.policy, "policy");
  p.value = (value_terms(m, ua, agent, agent_targets, r.grads, w.value / rows) +
             value_terms(m, ue, expert, expert_targets, r.grads, w.value / rows)) /
            rows;
  require_finite(p.value, "value");
  p.consistency = (consistency_terms(m, ua, agent, r.grads, w.consistency / rows) +
                   consistency_terms(m, ue, expert, r.grads, w.consistency / rows)) /
                  rows;
  require_finite(p.consistency, "consistency");
  p.disc = ail::disc_loss_terms(m, agent, ua, expert, ue, &r.grads, w.disc, w.detach_disc_encoder);
  require_finite(p.disc, "discriminator");
  p.gradient_penalty =
      ail::gradient_penalty_terms(m, agent, ua, expert, ue, gp_mix, &r.grads, w.disc * w.gradient_penalty);
  require_finite(p.gradient_penalty, "gradient penalty");
  p.bc = bc_terms(m, ue, expert, &r.grads, w.bc);
  require_finite(p.bc, "bc");
  p.total = p.weighted_sum(w);

  backprop_unroll(m, ua, r.grads);
  backprop_unroll(m, ue, r.grads);
  if (!r.grads.all_finite()) throw RuntimeError("total loss: non-finite gradient");
  return r;
}

LossResult total_loss(const ModelBundle& m, const UnrollBatch& agent, const TargetBatch& agent_targets,
                      const UnrollBatch& expert, const TargetBatch& expert_targets, const LossWeights& w,
                      RandomStream& stream) {
  const Eigen::Index rows = std::min(agent.batch_size(), expert.batch_size());
  Eigen::VectorXd mix(rows);
  for (Eigen::Index c = 0; c < rows; ++c) mix(c) = stream.uniform();
  return total_loss(m, agent, agent_targets, expert, expert_targets, w, mix);
}

LossResult bc_only_loss(const ModelBundle& m, const UnrollBatch& expert) {
  if (expert.origin != Origin::kExpert) throw InvalidArgument("bc_only_loss: expert rows only");
  LossResult r{{}, m.zero_grads()};
  Unroll u = unroll_latents(m, expert);
  r.parts.bc = bc_terms(m, u, expert, &r.grads, 1.0);
  require_finite(r.parts.bc, "bc");
  r.parts.total = r.parts.bc;
  backprop_unroll(m, u, r.grads);
  return r;
}

}  // namespace imitree
