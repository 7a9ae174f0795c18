#pragma once

#include <functional>

#include "imitree/mcts.hpp"

namespace imitree::test_support {

/// Search model defined by plain functions. Latent = [depth, root action...].
class FunctionStub final : public mcts::SearchModel {
 public:
  using RewardFn = std::function<double(int depth, const Eigen::VectorXd& root_action, const Eigen::VectorXd& action)>;

  FunctionStub(int act_dim, SquashedNormalParams policy, SquashedNormalParams bc, RewardFn reward,
               std::function<double(const LatentState&)> value = nullptr)
      : act_dim_(act_dim),
        policy_(std::move(policy)),
        bc_(std::move(bc)),
        reward_(std::move(reward)),
        value_(std::move(value)) {}

  LatentState represent(const Eigen::VectorXd&) const override {
    return {Eigen::VectorXd::Zero(1 + act_dim_)};
  }
  NodeEval evaluate(const LatentState& h) const override {
    return {value_ ? value_(h) : 0.0, policy_, bc_};
  }
  Transition transition(const LatentState& h, const Eigen::VectorXd& a) const override {
    const int depth = static_cast<int>(h.h(0));
    Eigen::VectorXd next = h.h;
    next(0) = depth + 1;
    if (depth == 0) next.tail(act_dim_) = a;
    const Eigen::VectorXd root_action = next.tail(act_dim_);
    return {{next}, reward_(depth, root_action, a)};
  }

 private:
  int act_dim_;
  SquashedNormalParams policy_, bc_;
  RewardFn reward_;
  std::function<double(const LatentState&)> value_;
};

/// A squashed normal whose tanh-mode is `action` with the narrowest spread.
inline SquashedNormalParams point_mass(double action, double log_std = -5.0) {
  return {Eigen::VectorXd::Constant(1, std::atanh(action)), Eigen::VectorXd::Constant(1, log_std)};
}

/// Two-armed bandit: the BC arm pays 1, the policy arm pays 0; one step deep.
inline FunctionStub bandit_stub() {
  return FunctionStub(1, point_mass(-0.5), point_mass(0.5), [](int depth, const Eigen::VectorXd&, const Eigen::VectorXd& a) {
    return depth == 0 && a(0) > 0.0 ? 1.0 : 0.0;
  });
}

/// BC proposes the rewarded action (near 0.5); the policy sits on a zero
/// reward region near -0.5.
inline FunctionStub bc_steering_stub() {
  return FunctionStub(1, point_mass(-0.5, -3.0), point_mass(0.5, -5.0),
                      [](int depth, const Eigen::VectorXd&, const Eigen::VectorXd& a) {
                        return depth == 0 && std::abs(a(0) - 0.5) < 0.1 ? 1.0 : 0.0;
                      });
}

/// BC proposes a penalized action; the policy region pays 0.5.
inline FunctionStub bc_neglect_stub() {
  return FunctionStub(1, point_mass(-0.5, -3.0), point_mass(0.5, -5.0),
                      [](int depth, const Eigen::VectorXd&, const Eigen::VectorXd& a) {
                        if (depth != 0) return 0.0;
                        return std::abs(a(0) - 0.5) < 0.1 ? 0.0 : 0.5;
                      });
}

}  // namespace imitree::test_support
