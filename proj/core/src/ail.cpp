#include "imitree/ail.hpp"

#include <algorithm>
#include <cmath>

#include "imitree/error.hpp"

namespace imitree::ail {

double ail_reward(double p) {
  p = std::clamp(p, kDiscClamp, 1.0 - kDiscClamp);
  return -std::log1p(-p);
}

namespace {

// All valid (latent, action) pairs of one side as columns, with the
// (position, row) each column came from.
struct PairBlock {
  Eigen::MatrixXd x;
  std::vector<std::pair<int, int>> where;
};

PairBlock gather_pairs(const UnrollBatch& batch, const Unroll& unroll) {
  const int latent = static_cast<int>(unroll.latents.front().rows());
  const int act = static_cast<int>(batch.actions.front().rows());
  PairBlock block;
  for (int i = 0; i < batch.positions(); ++i)
    for (int b = 0; b < batch.batch_size(); ++b)
      if (batch.mask(i, b) > 0.0) block.where.emplace_back(i, b);
  block.x.resize(latent + act, static_cast<Eigen::Index>(block.where.size()));
  for (std::size_t c = 0; c < block.where.size(); ++c) {
    const auto [i, b] = block.where[c];
    block.x.col(static_cast<Eigen::Index>(c)) << unroll.latents[static_cast<std::size_t>(i)].col(b),
        batch.actions[static_cast<std::size_t>(i)].col(b);
  }
  return block;
}

// Mean binary cross-entropy of one side against `label`, from logits.
double side_loss(const ModelBundle& m, const UnrollBatch& batch, Unroll& unroll, double label, ModelGrads* grads,
                 double weight, bool detach_encoder) {
  const PairBlock block = gather_pairs(batch, unroll);
  const auto count = block.x.cols();
  if (count == 0) throw InvalidArgument("disc loss: batch has no valid positions");
  const auto& d = m.net(Net::kDiscriminator);
  nn::MlpTape tape;
  d.forward(block.x, &tape);
  const Eigen::RowVectorXd logits = tape.pre.back().row(0);
  double total = 0.0;
  Eigen::MatrixXd dlogit(1, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    const double u = logits(c);
    // label 1: softplus(-u); label 0: softplus(u)
    const double term = label > 0.5 ? softplus(-u) : softplus(u);
    if (!std::isfinite(term)) {
      throw RuntimeError("disc loss: non-finite term at step " +
                         std::to_string(block.where[static_cast<std::size_t>(c)].first));
    }
    total += term;
    const double sig = u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
    dlogit(0, c) = (sig - label) * weight / static_cast<double>(count);
  }
  if (grads) {
    const Eigen::MatrixXd dx = d.backward(tape, dlogit, (*grads)[Net::kDiscriminator], true);
    if (!detach_encoder) {
      const int latent = static_cast<int>(unroll.latents.front().rows());
      for (std::size_t c = 0; c < block.where.size(); ++c) {
        const auto [i, b] = block.where[c];
        unroll.d_latents[static_cast<std::size_t>(i)].col(b) +=
            dx.col(static_cast<Eigen::Index>(c)).head(latent);
      }
    }
  }
  return total / static_cast<double>(count);
}

void check_pair(const UnrollBatch& agent, const UnrollBatch& expert) {
  if (agent.unroll_steps != expert.unroll_steps) throw InvalidArgument("disc loss: unroll lengths differ");
  if (agent.batch_size() < 1 || expert.batch_size() < 1) throw InvalidArgument("disc loss: empty batch");
}

}  // namespace

double disc_loss_terms(const ModelBundle& m, const UnrollBatch& agent, Unroll& agent_unroll,
                       const UnrollBatch& expert, Unroll& expert_unroll, ModelGrads* grads, double weight,
                       bool detach_encoder) {
  check_pair(agent, expert);
  return side_loss(m, expert, expert_unroll, 1.0, grads, weight, detach_encoder) +
         side_loss(m, agent, agent_unroll, 0.0, grads, weight, detach_encoder);
}

double multi_step_disc_loss(const ModelBundle& m, const UnrollBatch& agent, const UnrollBatch& expert) {
  check_pair(agent, expert);
  Unroll ua = unroll_latents(m, agent);
  Unroll ue = unroll_latents(m, expert);
  return disc_loss_terms(m, agent, ua, expert, ue, nullptr, 0.0);
}

double gradient_penalty_terms(const ModelBundle& m, const UnrollBatch& agent, const Unroll& agent_unroll,
                              const UnrollBatch& expert, const Unroll& expert_unroll,
                              const Eigen::VectorXd& mix, ModelGrads* grads, double weight) {
  check_pair(agent, expert);
  const Eigen::Index rows = std::min(agent.batch_size(), expert.batch_size());
  if (mix.size() != rows) throw InvalidArgument("gradient_penalty: need one mixing coefficient per matched row");
  const Eigen::MatrixXd xa = stack_rows(agent_unroll.latents[0].leftCols(rows), agent.actions[0].leftCols(rows));
  const Eigen::MatrixXd xe = stack_rows(expert_unroll.latents[0].leftCols(rows), expert.actions[0].leftCols(rows));
  Eigen::MatrixXd x(xa.rows(), rows);
  for (Eigen::Index c = 0; c < rows; ++c) x.col(c) = mix(c) * xe.col(c) + (1.0 - mix(c)) * xa.col(c);

  const auto& d = m.net(Net::kDiscriminator);
  nn::MlpTape tape;
  d.forward(x, &tape);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(1, rows);
  const Eigen::MatrixXd gx = d.input_gradient(tape, ones);
  double total = 0.0;
  Eigen::MatrixXd dgx = Eigen::MatrixXd::Zero(gx.rows(), rows);
  for (Eigen::Index c = 0; c < rows; ++c) {
    const double norm = gx.col(c).norm();
    total += (norm - 1.0) * (norm - 1.0);
    // The norm is not differentiable at 0; the subgradient 0 is used there.
    if (norm > 0.0) dgx.col(c) = gx.col(c) * (2.0 * (norm - 1.0) / norm * weight / static_cast<double>(rows));
  }
  const double penalty = total / static_cast<double>(rows);
  if (!std::isfinite(penalty)) throw RuntimeError("gradient_penalty: non-finite penalty");
  if (grads) d.input_gradient_backward(tape, ones, dgx, (*grads)[Net::kDiscriminator]);
  return penalty;
}

double gradient_penalty(const ModelBundle& m, const UnrollBatch& agent, const UnrollBatch& expert,
                        RandomStream& stream) {
  check_pair(agent, expert);
  const Unroll ua = unroll_latents(m, agent);
  const Unroll ue = unroll_latents(m, expert);
  const Eigen::Index rows = std::min(agent.batch_size(), expert.batch_size());
  Eigen::VectorXd mix(rows);
  for (Eigen::Index c = 0; c < rows; ++c) mix(c) = stream.uniform();
  return gradient_penalty_terms(m, agent, ua, expert, ue, mix, nullptr, 0.0);
}

double bootstrap_reward(const TargetModel& target, const Eigen::VectorXd& obs, const Eigen::VectorXd& action) {
  if (!target.valid()) throw InvalidArgument("bootstrap_reward: empty target model");
  const ModelBundle& t = target.model();
  return ail_reward(t.discriminate(t.represent(obs), action));
}

}  // namespace imitree::ail
