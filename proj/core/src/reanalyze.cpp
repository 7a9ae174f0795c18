#include "imitree/reanalyze.hpp"

#include <cmath>

#include "imitree/ail.hpp"
#include "imitree/error.hpp"

namespace imitree {

Reanalyzer::Reanalyzer(ReanalyzeConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), seed_(seed) {
  cfg_.search.validate();
}

void Reanalyzer::set_target(TargetModel target) {
  if (!target.valid()) throw InvalidArgument("Reanalyzer: empty target model");
  target_ = std::move(target);
  cache_.clear();
}

const Reanalyzer::Entry& Reanalyzer::search_at(const UnrollBatch& batch, int i, Eigen::Index b,
                                                const ModelBundle& search_model) {
  const bool keyed = !batch.rows.empty();
  const std::size_t traj = keyed ? batch.rows[static_cast<std::size_t>(b)].trajectory : static_cast<std::size_t>(b);
  const std::size_t t = keyed ? batch.rows[static_cast<std::size_t>(b)].t + static_cast<std::size_t>(i)
                              : static_cast<std::size_t>(i);
  const auto origin = static_cast<int>(batch.origin);
  const bool cacheable = keyed && !cfg_.search_with_live_model;
  const auto key = std::make_tuple(origin, traj, t);
  if (cacheable) {
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  RandomStream stream(derive_seed(seed_, {static_cast<std::uint64_t>(target_.snapshot_step() + 1),
                                          static_cast<std::uint64_t>(origin), traj, t,
                                          keyed ? 0u : 1u}));
  const mcts::BundleSearchModel model(search_model);
  mcts::SearchOptions options;
  options.root_noise = cfg_.root_noise;
  const auto result =
      mcts::run_search(batch.observations[static_cast<std::size_t>(i)].col(b), model, cfg_.search, stream, options);
  ++searches_;
  Entry e{mcts::policy_target(result), result.root_value};
  if (!cacheable) {
    scratch_ = std::move(e);
    return scratch_;
  }
  return cache_.emplace(key, std::move(e)).first->second;
}

TargetBatch Reanalyzer::run(const UnrollBatch& batch, const ModelBundle& live) {
  if (!target_.valid()) throw InvalidArgument("Reanalyzer: no target model set");
  batch.validate();
  const ModelBundle& tm = target_.model();
  const ModelBundle& search_model = cfg_.search_with_live_model ? live : tm;
  const int n = batch.unroll_steps;
  const int bsz = batch.batch_size();
  const double gamma = cfg_.search.discount;

  TargetBatch out;
  out.unroll_steps = n;
  out.batch_size = bsz;
  out.origin = batch.origin;
  out.policy.resize(static_cast<std::size_t>((n + 1) * bsz));
  out.value = Eigen::MatrixXd::Zero(n + 1, bsz);
  out.reward = Eigen::MatrixXd::Zero(n + 1, bsz);
  out.bootstrap = Eigen::MatrixXd::Zero(n + 1, bsz);
  out.root_value = Eigen::MatrixXd::Zero(n + 1, bsz);
  out.mask = batch.mask;
  out.terminal_bootstrap.assign(static_cast<std::size_t>(bsz), false);

  for (Eigen::Index b = 0; b < bsz; ++b) {
    for (int i = 0; i <= n; ++i) {
      if (batch.mask(i, b) <= 0.0) continue;
      const auto k = static_cast<std::size_t>(i);
      const Entry& e = search_at(batch, i, b, search_model);
      out.policy[static_cast<std::size_t>(i * bsz + b)] = e.policy;
      out.root_value(i, b) = e.root_value;

      const Eigen::VectorXd s = batch.observations[k].col(b);
      const Eigen::VectorXd a = batch.actions[k].col(b);
      const Eigen::VectorXd s_next = batch.observations[k + 1].col(b);
      const double r_hat = ail::bootstrap_reward(target_, s, a);
      // s_{t+i+1} is the terminal observation when the following action is
      // padding (or lies past the unroll window and the trajectory ends).
      const bool next_is_terminal = (i < n) ? batch.mask(i + 1, b) <= 0.0 : false;
      double v_boot;
      if (cfg_.root_value_bootstrap && i < n && !next_is_terminal) {
        v_boot = search_at(batch, i + 1, b, search_model).root_value;
      } else {
        v_boot = tm.predict_value(tm.represent(s_next));
      }
      if (next_is_terminal) out.terminal_bootstrap[static_cast<std::size_t>(b)] = true;
      out.reward(i, b) = r_hat;
      out.bootstrap(i, b) = v_boot;
      out.value(i, b) = r_hat + gamma * v_boot;
      if (!std::isfinite(out.value(i, b))) {
        throw RuntimeError("reanalyze: non-finite value target at position " + std::to_string(i));
      }
    }
  }
  return out;
}

TargetBatch reanalyze(const UnrollBatch& batch, const ModelBundle& live, const TargetModel& target,
                      const ReanalyzeConfig& cfg, std::uint64_t seed) {
  Reanalyzer r(cfg, seed);
  r.set_target(target);
  return r.run(batch, live);
}

}  // namespace imitree
