#pragma once

#include <cstdint>
#include <map>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "imitree/batch.hpp"
#include "imitree/mcts.hpp"
#include "imitree/model.hpp"

namespace imitree {

struct ReanalyzeConfig {
  mcts::SearchConfig search;
  /// Bootstrap from the root-search value at s_{t+i+1} instead of the decoded
  /// target value network.
  bool root_value_bootstrap = false;
  /// Run the searches with the live model instead of the snapshot. Disables
  /// the per-snapshot cache.
  bool search_with_live_model = false;
  bool root_noise = true;
};

/// Fresh targets for every position of an UnrollBatch. Matrices are
/// (n+1) x B; policy targets are indexed [i * B + b].
struct TargetBatch {
  int unroll_steps = 0;
  int batch_size = 0;
  Origin origin = Origin::kAgent;
  std::vector<std::vector<mcts::WeightedAction>> policy;
  Eigen::MatrixXd value;      // z
  Eigen::MatrixXd reward;     // r-hat from the target discriminator
  Eigen::MatrixXd bootstrap;  // V_boot(s_{t+i+1})
  Eigen::MatrixXd root_value;
  Eigen::MatrixXd mask;
  /// Rows flagged when the last position bootstrapped from the terminal
  /// observation of a trajectory.
  std::vector<bool> terminal_bootstrap;

  const std::vector<mcts::WeightedAction>& policy_at(int i, int b) const {
    return policy[static_cast<std::size_t>(i * batch_size + b)];
  }
};

/// Reanalyze against a fixed target snapshot. Per-position results are cached
/// until the next `set_target`; every search draws from a stream derived
/// from (seed, snapshot step, origin, trajectory, t), so results do not depend
/// on the order in which positions are requested or on the cache.
class Reanalyzer {
 public:
  Reanalyzer(ReanalyzeConfig cfg, std::uint64_t seed);

  void set_target(TargetModel target);
  const TargetModel& target() const { return target_; }
  const ReanalyzeConfig& config() const { return cfg_; }

  TargetBatch run(const UnrollBatch& batch, const ModelBundle& live);

  std::uint64_t searches_run() const { return searches_; }
  std::size_t cache_size() const { return cache_.size(); }
  void clear_cache() { cache_.clear(); }

 private:
  struct Entry {
    std::vector<mcts::WeightedAction> policy;
    double root_value = 0.0;
  };
  const Entry& search_at(const UnrollBatch& batch, int i, Eigen::Index b, const ModelBundle& search_model);

  ReanalyzeConfig cfg_;
  std::uint64_t seed_;
  TargetModel target_;
  std::map<std::tuple<int, std::size_t, std::size_t>, Entry> cache_;
  Entry scratch_;
  std::uint64_t searches_ = 0;
};

/// One-shot form without caching.
TargetBatch reanalyze(const UnrollBatch& batch, const ModelBundle& live, const TargetModel& target,
                      const ReanalyzeConfig& cfg, std::uint64_t seed);

}  // namespace imitree
