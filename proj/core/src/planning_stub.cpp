#include "imitree/planning_stub.hpp"

#include <algorithm>
#include <cmath>

#include "imitree/error.hpp"

namespace imitree::mcts {

LatentState PlanningStub::represent(const Eigen::VectorXd&) const { return {Eigen::Vector2d::Zero()}; }

SearchModel::NodeEval PlanningStub::evaluate(const LatentState& h) const {
  const double value = h.h(0) == 1.0 ? p_.value_scale * r1(h.h(1)) : 0.0;
  return {value, p_.policy, p_.bc};
}

SearchModel::Transition PlanningStub::transition(const LatentState& h, const Eigen::VectorXd& action) const {
  const double depth = h.h(0);
  Eigen::Vector2d next(depth + 1.0, h.h(1));
  double reward = 0.0;
  if (depth == 0.0) {
    next(1) = action(0);
    reward = r0(action(0));
  } else if (depth == 1.0) {
    reward = r1(h.h(1));
  }
  return {{next}, reward};
}

double PlanningStub::r0(double a) const { return p_.r0_scale * 0.5 * (1.0 - a); }

double PlanningStub::r1(double root_action) const {
  const double z = (root_action - p_.peak) / p_.width;
  return p_.r1_scale * std::exp(-z * z);
}

double PlanningStub::exhaustive_optimum(const SearchResult& result, double discount) const {
  if (result.children.empty()) throw InvalidArgument("exhaustive_optimum: empty search result");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : result.children) best = std::max(best, r0(c.action(0)) + discount * r1(c.action(0)));
  return best;
}

PlanningPoint planning_oracle(const PlanningStub& stub, const SearchConfig& cfg,
                              const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw InvalidArgument("planning_oracle: no seeds");
  PlanningPoint p;
  for (auto s : seeds) {
    RandomStream stream(s);
    const auto r = run_search(Eigen::VectorXd::Zero(1), stub, cfg, stream);
    const double opt = stub.exhaustive_optimum(r, cfg.discount);
    p.mean_error += opt - r.root_value;
    p.mean_optimum += opt;
    p.mean_root_value += r.root_value;
  }
  const double n = static_cast<double>(seeds.size());
  p.mean_error /= n;
  p.mean_optimum /= n;
  p.mean_root_value /= n;
  return p;
}

}  // namespace imitree::mcts
