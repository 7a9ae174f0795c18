#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "imitree/batch.hpp"
#include "imitree/rng.hpp"

namespace imitree {

/// One episode: observations s_0..s_T and actions a_0..a_{T-1}. Environment
/// rewards ride along for reporting; nothing on the learning path reads them.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Origin source, std::uint64_t seed, Eigen::VectorXd first_observation);

  void append(const Eigen::VectorXd& action, const Eigen::VectorXd& next_observation, double env_reward);

  Origin source() const { return source_; }
  std::uint64_t seed() const { return seed_; }
  /// Number of transitions (actions).
  std::size_t length() const { return actions_.size(); }
  const std::vector<Eigen::VectorXd>& observations() const { return observations_; }
  const std::vector<Eigen::VectorXd>& actions() const { return actions_; }
  const Eigen::VectorXd& observation(std::size_t t) const { return observations_.at(t); }
  const Eigen::VectorXd& action(std::size_t t) const { return actions_.at(t); }

  /// Reporting only: evaluation, demo-info and reference returns.
  std::span<const double> env_rewards_for_reporting() const { return env_rewards_; }
  double env_return() const;
  /// Overwrites the stored rewards (file loading and isolation tests).
  void replace_env_rewards(std::vector<double> rewards);

  /// Throws unless len(actions) = len(observations) - 1 and rewards match.
  void validate() const;

 private:
  Origin source_ = Origin::kAgent;
  std::uint64_t seed_ = 0;
  std::vector<Eigen::VectorXd> observations_;
  std::vector<Eigen::VectorXd> actions_;
  std::vector<double> env_rewards_;
};

/// Unbounded FIFO-free store of trajectories. Not internally synchronized:
/// the training loop owns it and is sequential.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(Origin origin = Origin::kAgent) : origin_(origin) {}

  void push(Trajectory traj);

  Origin origin() const { return origin_; }
  bool empty() const { return trajectories_.empty(); }
  std::size_t size() const { return trajectories_.size(); }
  const Trajectory& trajectory(std::size_t i) const { return trajectories_.at(i); }
  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  /// Transitions stored, which is also the number of sampleable starts.
  std::size_t num_transitions() const { return total_; }
  /// Starts whose n+1 actions all lie inside the trajectory.
  std::size_t num_full_positions(int n_unroll) const;

  /// Maps a flat start index in [0, num_transitions()) to (trajectory, t).
  RowRef locate(std::size_t flat) const;

  /// Uniform over every stored transition t; positions running past the end
  /// are padded with the terminal observation and zero actions and masked.
  UnrollBatch sample_unroll(int batch_size, int n_unroll, RandomStream& stream) const;
  /// Builds a batch for explicit starts.
  UnrollBatch make_unroll(const std::vector<RowRef>& rows, int n_unroll) const;

 private:
  Origin origin_;
  std::vector<Trajectory> trajectories_;
  std::vector<std::size_t> prefix_;  // prefix_[i] = transitions before trajectory i
  std::size_t total_ = 0;
};

/// Fixed set of expert demonstrations.
class ExpertDataset {
 public:
  ExpertDataset() : buffer_(Origin::kExpert) {}
  explicit ExpertDataset(std::vector<Trajectory> demos);

  const ReplayBuffer& buffer() const { return buffer_; }
  std::size_t size() const { return buffer_.size(); }
  bool empty() const { return buffer_.empty(); }
  const Trajectory& demo(std::size_t i) const { return buffer_.trajectory(i); }
  /// Mean return of the demonstrations (reporting only).
  double mean_return() const;

 private:
  ReplayBuffer buffer_;
};

}  // namespace imitree
