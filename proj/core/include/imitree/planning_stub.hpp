#pragma once

#include <cstdint>
#include <vector>

#include "imitree/mcts.hpp"

namespace imitree::mcts {

/// Depth-2 hand-built search model with known rewards, used to check search
/// against exhaustive enumeration and to sweep planning budgets.
///
/// Latent h = [depth, root action]. The first step pays r0(a); the second pays
/// r1(root action) whatever is chosen there; deeper steps pay 0. r0 mildly
/// prefers negative actions while r1 peaks at a root action of `peak`. The
/// value at depth 1 is value_scale * r1(root action) and 0 elsewhere, so the
/// estimate seeding root Q is biased low and deeper visits remove the bias.
class PlanningStub final : public SearchModel {
 public:
  struct Params {
    double r0_scale = 0.1;
    double r1_scale = 0.4;
    double peak = 0.6;
    double width = 0.3;
    double value_scale = 0.5;
    SquashedNormalParams policy{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)};
    /// Centered on the peak.
    SquashedNormalParams bc{Eigen::VectorXd::Constant(1, 0.6931471805599453), Eigen::VectorXd::Constant(1, -1.0)};
  };

  PlanningStub() = default;
  explicit PlanningStub(Params p) : p_(std::move(p)) {}

  LatentState represent(const Eigen::VectorXd& obs) const override;
  NodeEval evaluate(const LatentState& h) const override;
  Transition transition(const LatentState& h, const Eigen::VectorXd& action) const override;

  double r0(double a) const;
  double r1(double root_action) const;
  /// max over the root's sampled actions of r0 + discount * r1: the exact
  /// optimum over the sampled action set.
  double exhaustive_optimum(const SearchResult& result, double discount) const;

 private:
  Params p_;
};

struct PlanningPoint {
  double mean_error = 0.0;  // optimum - root value, averaged over seeds
  double mean_optimum = 0.0;
  double mean_root_value = 0.0;
};

/// Runs one search per seed on the stub and averages the root-value error.
PlanningPoint planning_oracle(const PlanningStub& stub, const SearchConfig& cfg, const std::vector<std::uint64_t>& seeds);

}  // namespace imitree::mcts
