#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace imitree {

enum class Origin : std::uint8_t { kAgent = 0, kExpert = 1 };

/// Where a batch row came from, so reanalyze can look up stored data.
struct RowRef {
  std::size_t trajectory = 0;
  std::size_t t = 0;
};

/// Sequences (s_t, a_t, ..., a_{t+n}) plus the actual observations
/// s_{t+1..t+n+1}. Columns are batch rows.
struct UnrollBatch {
  int unroll_steps = 5;  // n
  Origin origin = Origin::kAgent;
  /// observations[i] is obs_dim x B holding s_{t+i}, i = 0..n+1. Positions
  /// past the end of a trajectory repeat its terminal observation.
  std::vector<Eigen::MatrixXd> observations;
  /// actions[i] is act_dim x B holding a_{t+i}, i = 0..n; zero when padded.
  std::vector<Eigen::MatrixXd> actions;
  /// mask(i, b) = 1 when a_{t+i} of row b is a real transition.
  Eigen::MatrixXd mask;
  std::vector<RowRef> rows;

  int batch_size() const { return observations.empty() ? 0 : static_cast<int>(observations.front().cols()); }
  int positions() const { return unroll_steps + 1; }
  void validate() const;
};

}  // namespace imitree
