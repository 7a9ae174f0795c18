#include "imitree/replay.hpp"

#include <algorithm>
#include <cmath>

#include "imitree/error.hpp"

namespace imitree {

Trajectory::Trajectory(Origin source, std::uint64_t seed, Eigen::VectorXd first_observation)
    : source_(source), seed_(seed) {
  observations_.push_back(std::move(first_observation));
}

void Trajectory::append(const Eigen::VectorXd& action, const Eigen::VectorXd& next_observation, double env_reward) {
  if (observations_.empty()) throw InvalidArgument("Trajectory: append before the first observation");
  if (next_observation.size() != observations_.front().size()) {
    throw InvalidArgument("Trajectory: observation dimension changed");
  }
  if (!actions_.empty() && action.size() != actions_.front().size()) {
    throw InvalidArgument("Trajectory: action dimension changed");
  }
  actions_.push_back(action);
  observations_.push_back(next_observation);
  env_rewards_.push_back(env_reward);
}

double Trajectory::env_return() const {
  double s = 0.0;
  for (double r : env_rewards_) s += r;
  return s;
}

void Trajectory::replace_env_rewards(std::vector<double> rewards) {
  if (rewards.size() != actions_.size()) throw InvalidArgument("Trajectory: one reward per transition required");
  env_rewards_ = std::move(rewards);
}

void Trajectory::validate() const {
  if (observations_.empty()) throw InvalidArgument("Trajectory: no observations");
  if (actions_.size() + 1 != observations_.size()) {
    throw InvalidArgument("Trajectory: need len(actions) = len(observations) - 1");
  }
  if (env_rewards_.size() != actions_.size()) throw InvalidArgument("Trajectory: reward count mismatch");
  for (const auto& a : actions_)
    if (!a.allFinite() || (a.array().abs() > 1.0).any()) throw InvalidArgument("Trajectory: action outside [-1, 1]");
  for (const auto& o : observations_)
    if (!o.allFinite()) throw InvalidArgument("Trajectory: non-finite observation");
}

void ReplayBuffer::push(Trajectory traj) {
  traj.validate();
  if (traj.length() == 0) throw InvalidArgument("ReplayBuffer: trajectory has no transitions");
  if (traj.source() != origin_) throw InvalidArgument("ReplayBuffer: trajectory source does not match buffer");
  if (!trajectories_.empty()) {
    const auto& first = trajectories_.front();
    if (first.observation(0).size() != traj.observation(0).size() ||
        first.action(0).size() != traj.action(0).size()) {
      throw InvalidArgument("ReplayBuffer: dimension mismatch with stored trajectories");
    }
  }
  prefix_.push_back(total_);
  total_ += traj.length();
  trajectories_.push_back(std::move(traj));
}

std::size_t ReplayBuffer::num_full_positions(int n_unroll) const {
  std::size_t n = 0;
  for (const auto& t : trajectories_) {
    const auto need = static_cast<std::size_t>(n_unroll + 1);
    if (t.length() >= need) n += t.length() - need + 1;
  }
  return n;
}

RowRef ReplayBuffer::locate(std::size_t flat) const {
  if (flat >= total_) throw InvalidArgument("ReplayBuffer: position out of range");
  const auto it = std::upper_bound(prefix_.begin(), prefix_.end(), flat);
  const auto traj = static_cast<std::size_t>(it - prefix_.begin()) - 1;
  return {traj, flat - prefix_[traj]};
}

UnrollBatch ReplayBuffer::sample_unroll(int batch_size, int n_unroll, RandomStream& stream) const {
  if (empty()) throw InvalidArgument("ReplayBuffer: sample from an empty buffer");
  if (batch_size < 1) throw InvalidArgument("ReplayBuffer: batch size must be >= 1");
  std::vector<RowRef> rows;
  rows.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) rows.push_back(locate(stream.below(total_)));
  return make_unroll(rows, n_unroll);
}

UnrollBatch ReplayBuffer::make_unroll(const std::vector<RowRef>& rows, int n_unroll) const {
  if (empty()) throw InvalidArgument("ReplayBuffer: empty buffer");
  if (n_unroll < 0) throw InvalidArgument("ReplayBuffer: negative unroll length");
  const auto b_count = static_cast<Eigen::Index>(rows.size());
  const auto obs_dim = trajectories_.front().observation(0).size();
  const auto act_dim = trajectories_.front().action(0).size();
  UnrollBatch batch;
  batch.unroll_steps = n_unroll;
  batch.origin = origin_;
  batch.rows = rows;
  batch.observations.assign(static_cast<std::size_t>(n_unroll + 2), Eigen::MatrixXd(obs_dim, b_count));
  batch.actions.assign(static_cast<std::size_t>(n_unroll + 1), Eigen::MatrixXd::Zero(act_dim, b_count));
  batch.mask = Eigen::MatrixXd::Zero(n_unroll + 1, b_count);
  for (Eigen::Index b = 0; b < b_count; ++b) {
    const RowRef& r = rows[static_cast<std::size_t>(b)];
    const Trajectory& traj = trajectory(r.trajectory);
    if (r.t >= traj.length()) throw InvalidArgument("ReplayBuffer: start past the last transition");
    for (int i = 0; i <= n_unroll + 1; ++i) {
      const std::size_t t = std::min(r.t + static_cast<std::size_t>(i), traj.length());
      batch.observations[static_cast<std::size_t>(i)].col(b) = traj.observation(t);
    }
    for (int i = 0; i <= n_unroll; ++i) {
      const std::size_t t = r.t + static_cast<std::size_t>(i);
      if (t < traj.length()) {
        batch.actions[static_cast<std::size_t>(i)].col(b) = traj.action(t);
        batch.mask(i, b) = 1.0;
      }
    }
  }
  return batch;
}

ExpertDataset::ExpertDataset(std::vector<Trajectory> demos) : buffer_(Origin::kExpert) {
  if (demos.empty()) throw InvalidArgument("ExpertDataset: no demonstrations");
  for (auto& d : demos) buffer_.push(std::move(d));
}

double ExpertDataset::mean_return() const {
  if (empty()) return 0.0;
  double s = 0.0;
  for (const auto& t : buffer_.trajectories()) s += t.env_return();
  return s / static_cast<double>(size());
}

}  // namespace imitree
