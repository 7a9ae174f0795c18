#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "imitree/codec.hpp"
#include "imitree/model.hpp"
#include "imitree/rng.hpp"

namespace imitree::mcts {

struct SearchConfig {
  int k_samples = 16;
  int n_simulations = 50;
  double c1 = 1.25;
  double c2 = 19625.0;
  double dirichlet_xi = 0.3;
  double root_noise_frac = 0.25;
  double bc_mix = 0.25;
  double discount = 0.99;

  void validate() const;
  /// Children drawn from the BC policy at each expansion: round(bc_mix * K).
  int num_bc_samples() const;
};

/// What a search needs from a model. Implemented by the learned bundle and by
/// hand-built stubs in tests.
class SearchModel {
 public:
  virtual ~SearchModel() = default;

  struct NodeEval {
    double value = 0.0;
    SquashedNormalParams policy;
    SquashedNormalParams bc;
  };
  struct Transition {
    LatentState next;
    double reward = 0.0;
  };

  virtual LatentState represent(const Eigen::VectorXd& obs) const = 0;
  virtual NodeEval evaluate(const LatentState& h) const = 0;
  virtual Transition transition(const LatentState& h, const Eigen::VectorXd& action) const = 0;
};

/// Search over a learned bundle: rewards are AIL rewards of the bundle's
/// discriminator, values are decoded from its value head.
class BundleSearchModel final : public SearchModel {
 public:
  explicit BundleSearchModel(const ModelBundle& model) : model_(&model) {}

  LatentState represent(const Eigen::VectorXd& obs) const override;
  NodeEval evaluate(const LatentState& h) const override;
  Transition transition(const LatentState& h, const Eigen::VectorXd& action) const override;

 private:
  const ModelBundle* model_;
};

struct Edge {
  Eigen::VectorXd action;
  double prior = 0.0;
  int visits = 0;
  double value_sum = 0.0;
  double reward = 0.0;
  bool has_reward = false;
  /// Pre-visit Q assigned by `init_root_q`; only meaningful at the root.
  double init_q = 0.0;
  bool has_init_q = false;
  bool from_bc = false;
  int child = -1;

  double q() const { return value_sum / visits; }
};

struct SearchNode {
  LatentState latent;
  double value = 0.0;
  SquashedNormalParams policy;
  SquashedNormalParams bc;
  std::vector<Edge> edges;
  bool is_root = false;

  bool expanded() const { return !edges.empty(); }
  int total_visits() const;
};

/// Running range of backed-up Q values across one tree.
class MinMaxStats {
 public:
  void update(double q);
  bool has_span() const { return max_ > min_; }
  /// (q - min)/(max - min) clamped to [0, 1]; 0 until two distinct values
  /// have been observed.
  double normalize(double q) const;
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

struct SearchTree {
  std::vector<SearchNode> nodes;  // nodes[0] is the root
  MinMaxStats minmax;

  SearchNode& root() { return nodes.front(); }
  const SearchNode& root() const { return nodes.front(); }
};

/// Creates a node holding `h` and its evaluation.
int add_node(SearchTree& tree, const SearchModel& model, LatentState h, bool is_root);

/// Samples K children: round(bc_mix*K) from the BC policy, the rest from the
/// policy, each with prior 1/K. Policy samples come first.
void expand(SearchNode& node, const SearchConfig& cfg, RandomStream& stream);

/// prior <- (1 - rho) prior + rho Dir(xi).
void add_root_noise(SearchNode& root, const SearchConfig& cfg, RandomStream& stream);

/// Q(s,a) = R(s,a) + discount * V(g(s,a)) for every root child. Creates the
/// child nodes and caches their rewards.
void init_root_q(SearchTree& tree, const SearchModel& model, const SearchConfig& cfg);

/// c(s) = c1 + log((1 + c2 + sum_b N(s,b)) / c2).
double exploration_weight(const SearchConfig& cfg, int total_visits);

/// (V(s) + sum of visited Q) / (1 + #visited); stands in for unvisited
/// children away from the root.
double mean_q(const SearchNode& node);

/// Q used by selection before normalization.
double selection_q(const SearchNode& node, const Edge& edge, double node_mean_q);

/// pUCT argmax; ties go to the lowest index.
int select_child(const SearchNode& node, const MinMaxStats& minmax, const SearchConfig& cfg);

/// One step of a root-to-leaf path: the node and the edge taken out of it.
struct PathStep {
  int node = 0;
  int edge = 0;
};

/// G <- R_edge + discount * G from the leaf upward; W += G, N += 1.
void backup(SearchTree& tree, const std::vector<PathStep>& path, double leaf_value, const SearchConfig& cfg);

struct ChildStat {
  Eigen::VectorXd action;
  int visits = 0;
  double visit_prob = 0.0;
  double q = 0.0;
  double prior = 0.0;
  bool from_bc = false;
};

struct SearchResult {
  double root_value = 0.0;
  std::vector<ChildStat> children;
  int best_index = 0;  // most visited, lowest index on ties

  int total_visits() const;
};

struct SearchOptions {
  bool root_noise = true;
  /// JSON lines: one record per simulation.
  std::ostream* trace = nullptr;
};

SearchResult run_search(const Eigen::VectorXd& root_obs, const SearchModel& model, const SearchConfig& cfg,
                        RandomStream& stream, const SearchOptions& options = {});
SearchResult run_search_latent(const LatentState& root, const SearchModel& model, const SearchConfig& cfg,
                               RandomStream& stream, const SearchOptions& options = {},
                               SearchTree* tree_out = nullptr);

struct WeightedAction {
  Eigen::VectorXd action;
  double weight = 0.0;
};

/// Root visit distribution.
std::vector<WeightedAction> policy_target(const SearchResult& result);

/// Samples a root child with probability proportional to N^(1/temperature);
/// temperature <= 0 returns the most visited child.
int act_index(const SearchResult& result, double temperature, RandomStream& stream);
Eigen::VectorXd act(const SearchResult& result, double temperature, RandomStream& stream);

}  // namespace imitree::mcts
