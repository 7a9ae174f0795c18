#include "imitree/mcts.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "imitree/ail.hpp"
#include "imitree/error.hpp"

namespace imitree::mcts {

void SearchConfig::validate() const {
  if (k_samples < 1) throw InvalidArgument("SearchConfig: k_samples must be >= 1");
  if (n_simulations < 1) throw InvalidArgument("SearchConfig: n_simulations must be >= 1");
  if (!(bc_mix >= 0.0 && bc_mix <= 1.0)) throw InvalidArgument("SearchConfig: bc_mix must be in [0, 1]");
  if (!(root_noise_frac >= 0.0 && root_noise_frac <= 1.0)) {
    throw InvalidArgument("SearchConfig: root_noise_frac must be in [0, 1]");
  }
  if (!(dirichlet_xi > 0.0)) throw InvalidArgument("SearchConfig: dirichlet_xi must be > 0");
  if (!(c2 > 0.0)) throw InvalidArgument("SearchConfig: c2 must be > 0");
  if (!(discount >= 0.0 && discount < 1.0)) throw InvalidArgument("SearchConfig: discount must be in [0, 1)");
}

int SearchConfig::num_bc_samples() const {
  return static_cast<int>(std::lround(bc_mix * k_samples));
}

LatentState BundleSearchModel::represent(const Eigen::VectorXd& obs) const { return model_->represent(obs); }

SearchModel::NodeEval BundleSearchModel::evaluate(const LatentState& h) const {
  return {model_->predict_value(h), model_->predict_policy(h), model_->predict_bc(h)};
}

SearchModel::Transition BundleSearchModel::transition(const LatentState& h, const Eigen::VectorXd& action) const {
  return {model_->dynamics(h, action), ail::ail_reward(model_->discriminate(h, action))};
}

int SearchNode::total_visits() const {
  int n = 0;
  for (const auto& e : edges) n += e.visits;
  return n;
}

void MinMaxStats::update(double q) {
  min_ = std::min(min_, q);
  max_ = std::max(max_, q);
}

double MinMaxStats::normalize(double q) const {
  if (!has_span()) return 0.0;
  return std::clamp((q - min_) / (max_ - min_), 0.0, 1.0);
}

int add_node(SearchTree& tree, const SearchModel& model, LatentState h, bool is_root) {
  auto eval = model.evaluate(h);
  SearchNode node;
  node.latent = std::move(h);
  node.value = eval.value;
  node.policy = std::move(eval.policy);
  node.bc = std::move(eval.bc);
  node.is_root = is_root;
  tree.nodes.push_back(std::move(node));
  return static_cast<int>(tree.nodes.size()) - 1;
}

void expand(SearchNode& node, const SearchConfig& cfg, RandomStream& stream) {
  if (cfg.k_samples < 1) throw InvalidArgument("expand: K must be >= 1");
  if (node.expanded()) throw InvalidArgument("expand: node already expanded");
  const int k = cfg.k_samples;
  const int n_bc = cfg.num_bc_samples();
  node.edges.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    Edge& e = node.edges[static_cast<std::size_t>(i)];
    e.from_bc = i >= k - n_bc;
    e.action = squashed_sample(e.from_bc ? node.bc : node.policy, stream);
    e.prior = 1.0 / k;
  }
}

void add_root_noise(SearchNode& root, const SearchConfig& cfg, RandomStream& stream) {
  if (!root.expanded()) throw InvalidArgument("add_root_noise: root not expanded");
  const Eigen::VectorXd noise = dirichlet_sample(cfg.dirichlet_xi, static_cast<int>(root.edges.size()), stream);
  const double rho = cfg.root_noise_frac;
  for (std::size_t i = 0; i < root.edges.size(); ++i) {
    root.edges[i].prior = (1.0 - rho) * root.edges[i].prior + rho * noise(static_cast<Eigen::Index>(i));
  }
}

void init_root_q(SearchTree& tree, const SearchModel& model, const SearchConfig& cfg) {
  if (!tree.root().expanded()) throw InvalidArgument("init_root_q: root not expanded");
  const std::size_t k = tree.root().edges.size();
  for (std::size_t i = 0; i < k; ++i) {
    auto tr = model.transition(tree.root().latent, tree.root().edges[i].action);
    const int child = add_node(tree, model, std::move(tr.next), false);
    Edge& e = tree.root().edges[i];  // re-fetch: add_node may reallocate
    e.child = child;
    e.reward = tr.reward;
    e.has_reward = true;
    e.init_q = tr.reward + cfg.discount * tree.nodes[static_cast<std::size_t>(child)].value;
    e.has_init_q = true;
    tree.minmax.update(e.init_q);
  }
}

double exploration_weight(const SearchConfig& cfg, int total_visits) {
  return cfg.c1 + std::log((1.0 + cfg.c2 + total_visits) / cfg.c2);
}

double mean_q(const SearchNode& node) {
  double sum = node.value;
  int count = 1;
  for (const auto& e : node.edges) {
    if (e.visits > 0) {
      sum += e.q();
      ++count;
    }
  }
  return sum / count;
}

double selection_q(const SearchNode& node, const Edge& edge, double node_mean_q) {
  if (edge.visits > 0) return edge.q();
  if (node.is_root && edge.has_init_q) return edge.init_q;
  return node_mean_q;
}

int select_child(const SearchNode& node, const MinMaxStats& minmax, const SearchConfig& cfg) {
  if (!node.expanded()) throw InvalidArgument("select_child: node not expanded");
  const int total = node.total_visits();
  const double c = exploration_weight(cfg, total);
  const double sqrt_total = std::sqrt(static_cast<double>(total));
  const double mq = mean_q(node);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.edges.size(); ++i) {
    const Edge& e = node.edges[i];
    const double q = minmax.normalize(selection_q(node, e, mq));
    const double score = q + c * e.prior * sqrt_total / (1.0 + e.visits);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(i);
    }
  }
  return best;
}

void backup(SearchTree& tree, const std::vector<PathStep>& path, double leaf_value, const SearchConfig& cfg) {
  if (path.empty()) throw InvalidArgument("backup: empty path");
  double g = leaf_value;
  for (std::size_t i = path.size(); i-- > 0;) {
    Edge& e = tree.nodes[static_cast<std::size_t>(path[i].node)].edges[static_cast<std::size_t>(path[i].edge)];
    if (!e.has_reward) throw InvalidArgument("backup: edge without a cached reward");
    g = e.reward + cfg.discount * g;
    e.value_sum += g;
    e.visits += 1;
    tree.minmax.update(e.q());
  }
}

int SearchResult::total_visits() const {
  int n = 0;
  for (const auto& c : children) n += c.visits;
  return n;
}

namespace {

void trace_simulation(std::ostream& os, int sim, const std::vector<PathStep>& path, double leaf_value,
                      const SearchNode& root) {
  nlohmann::json j;
  j["sim"] = sim;
  auto& p = j["path"] = nlohmann::json::array();
  for (const auto& s : path) p.push_back(s.edge);
  j["leaf_value"] = leaf_value;
  auto& v = j["root_visits"] = nlohmann::json::array();
  for (const auto& e : root.edges) v.push_back(e.visits);
  os << j.dump() << '\n';
}

SearchResult summarize(const SearchTree& tree) {
  const SearchNode& root = tree.root();
  SearchResult r;
  const int total = root.total_visits();
  double weighted = 0.0;
  int best_visits = -1;
  for (std::size_t i = 0; i < root.edges.size(); ++i) {
    const Edge& e = root.edges[i];
    ChildStat c;
    c.action = e.action;
    c.visits = e.visits;
    c.visit_prob = total > 0 ? static_cast<double>(e.visits) / total : 0.0;
    c.q = e.visits > 0 ? e.q() : (e.has_init_q ? e.init_q : 0.0);
    c.prior = e.prior;
    c.from_bc = e.from_bc;
    if (e.visits > 0) weighted += e.value_sum;
    if (e.visits > best_visits) {
      best_visits = e.visits;
      r.best_index = static_cast<int>(i);
    }
    r.children.push_back(std::move(c));
  }
  r.root_value = total > 0 ? weighted / total : 0.0;
  return r;
}

/// Selects down to an unexpanded node, expands it and backs up its value.
double simulate(SearchTree& tree, const SearchModel& model, const SearchConfig& cfg, RandomStream& stream,
                std::vector<PathStep>& path) {
  path.clear();
  int node_index = 0;
  int leaf = -1;
  while (leaf < 0) {
    SearchNode& node = tree.nodes[static_cast<std::size_t>(node_index)];
    const int edge_index = select_child(node, tree.minmax, cfg);
    path.push_back({node_index, edge_index});
    Edge& edge = node.edges[static_cast<std::size_t>(edge_index)];
    if (edge.child < 0) {
      auto tr = model.transition(node.latent, edge.action);
      const double reward = tr.reward;
      const int child = add_node(tree, model, std::move(tr.next), false);
      Edge& e = tree.nodes[static_cast<std::size_t>(node_index)].edges[static_cast<std::size_t>(edge_index)];
      e.child = child;
      e.reward = reward;
      e.has_reward = true;
      leaf = child;
    } else if (!tree.nodes[static_cast<std::size_t>(edge.child)].expanded()) {
      leaf = edge.child;
    } else {
      node_index = edge.child;
    }
  }
  SearchNode& leaf_node = tree.nodes[static_cast<std::size_t>(leaf)];
  expand(leaf_node, cfg, stream);
  const double leaf_value = leaf_node.value;
  backup(tree, path, leaf_value, cfg);
  return leaf_value;
}

}  // namespace

SearchResult run_search_latent(const LatentState& root_latent, const SearchModel& model, const SearchConfig& cfg,
                               RandomStream& stream, const SearchOptions& options, SearchTree* tree_out) {
  cfg.validate();
  SearchTree tree;
  tree.nodes.reserve(static_cast<std::size_t>(cfg.n_simulations + cfg.k_samples + 1));
  add_node(tree, model, root_latent, true);
  expand(tree.root(), cfg, stream);
  if (options.root_noise && cfg.root_noise_frac > 0.0) add_root_noise(tree.root(), cfg, stream);
  init_root_q(tree, model, cfg);

  std::vector<PathStep> path;
  for (int sim = 0; sim < cfg.n_simulations; ++sim) {
    double leaf_value = 0.0;
    try {
      leaf_value = simulate(tree, model, cfg, stream, path);
    } catch (const InvalidArgument& e) {
      throw InvalidArgument("run_search: simulation " + std::to_string(sim) + ": " + e.what());
    } catch (const RuntimeError& e) {
      throw RuntimeError("run_search: simulation " + std::to_string(sim) + ": " + e.what());
    }
    if (options.trace) trace_simulation(*options.trace, sim, path, leaf_value, tree.root());
  }
  SearchResult result = summarize(tree);
  if (tree_out) *tree_out = std::move(tree);
  return result;
}

SearchResult run_search(const Eigen::VectorXd& root_obs, const SearchModel& model, const SearchConfig& cfg,
                        RandomStream& stream, const SearchOptions& options) {
  return run_search_latent(model.represent(root_obs), model, cfg, stream, options);
}

std::vector<WeightedAction> policy_target(const SearchResult& result) {
  std::vector<WeightedAction> out;
  const int total = result.total_visits();
  out.reserve(result.children.size());
  for (const auto& c : result.children) {
    out.push_back({c.action, total > 0 ? static_cast<double>(c.visits) / total : 1.0 / result.children.size()});
  }
  return out;
}

int act_index(const SearchResult& result, double temperature, RandomStream& stream) {
  if (result.children.empty()) throw InvalidArgument("act: empty search result");
  if (temperature <= 0.0) return result.best_index;
  std::vector<double> w(result.children.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::pow(static_cast<double>(result.children[i].visits), 1.0 / temperature);
    sum += w[i];
  }
  if (!(sum > 0.0)) return result.best_index;
  double u = stream.uniform() * sum;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return static_cast<int>(i);
    u -= w[i];
  }
  // Rounding can leave u just above the last positive weight.
  for (std::size_t i = w.size(); i-- > 0;)
    if (w[i] > 0.0) return static_cast<int>(i);
  return result.best_index;
}

Eigen::VectorXd act(const SearchResult& result, double temperature, RandomStream& stream) {
  return result.children[static_cast<std::size_t>(act_index(result, temperature, stream))].action;
}

}  // namespace imitree::mcts
