#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "imitree/config.hpp"
#include "imitree/demo_io.hpp"
#include "imitree/envs.hpp"
#include "imitree/mcts.hpp"
#include "imitree/metrics.hpp"
#include "imitree/model.hpp"
#include "imitree/reanalyze.hpp"
#include "imitree/replay.hpp"

namespace imitree {

/// Maps (state, observation) to an action. Only the expert reads the state.
using Actor = std::function<Eigen::VectorXd(const envs::EnvState&, const Eigen::VectorXd&, RandomStream&)>;

Actor expert_actor(const envs::EnvSpec& spec);
Actor random_actor(const envs::EnvSpec& spec);
/// Search with the given model; temperature 0 picks the most visited child.
Actor search_actor(const ModelBundle& model, const mcts::SearchConfig& cfg, double temperature, bool root_noise);
/// tanh of the BC policy mean.
Actor bc_actor(const ModelBundle& model);
/// tanh of the policy mean.
Actor policy_actor(const ModelBundle& model);

/// Runs one full episode, recording observations, actions and env rewards.
Trajectory run_episode(const envs::EnvSpec& spec, const Actor& actor, std::uint64_t reset_seed, Origin source,
                       RandomStream& stream);

/// Collection episode with the live model: search with BC mixing, temperature
/// sampling, root noise.
Trajectory collect_episode(const envs::EnvSpec& spec, const ModelBundle& model, const mcts::SearchConfig& cfg,
                           std::uint64_t reset_seed, RandomStream& stream, double temperature = 1.0);

/// (J - J_random) / (J_expert - J_random); throws if the references coincide.
double normalized_score(double j, double j_expert, double j_random);

struct EvalResult {
  double mean_return = 0.0;
  double normalized = 0.0;
  std::vector<double> returns;
};

/// Mean return over `episodes` episodes with reset seeds derived from `seed`.
EvalResult evaluate(const envs::EnvSpec& spec, const Actor& actor, int episodes, std::uint64_t seed,
                    const DemoReferences& refs);

struct GeneratedDemos {
  DemoFile file;
  DemoReferences refs;
};

/// n expert episodes plus reference returns (J_expert: mean over the demos;
/// J_random: mean over `random_episodes` uniform-random episodes). Throws if
/// any demo misses the task's success criterion.
GeneratedDemos generate_demos(const envs::EnvSpec& spec, int n, std::uint64_t seed, int random_episodes = 100);

/// Whether an expert episode solved the task.
bool demo_succeeded(const envs::EnvSpec& spec, const Trajectory& traj, std::string* why = nullptr);

/// The sequential training loop. Construct, then call `run()`; or drive it
/// step by step in tests.
class Trainer {
 public:
  Trainer(TrainConfig cfg, ExpertDataset demos, DemoReferences refs, std::uint64_t seed,
          std::optional<std::filesystem::path> out_dir = std::nullopt);

  /// Runs until the env-step budget is spent; writes a final checkpoint when
  /// an output directory is set. On error, writes an abort checkpoint and
  /// rethrows.
  const Metrics& run();

  /// One control step of collection (and its train step once warm). Returns
  /// false when the budget is exhausted.
  bool advance();
  void train_step();
  EvalResult evaluate_now() const;

  const TrainConfig& config() const { return cfg_; }
  const envs::EnvSpec& env() const { return spec_; }
  const ModelBundle& model() const { return model_; }
  ModelBundle& mutable_model() { return model_; }
  const TargetModel& target() const { return reanalyzer_.target(); }
  const Reanalyzer& reanalyzer() const { return reanalyzer_; }
  const ReplayBuffer& agent_buffer() const { return agent_; }
  const ExpertDataset& demos() const { return demos_; }
  const Metrics& metrics() const { return metrics_; }
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t train_steps() const { return train_steps_; }
  const LossBreakdown& last_loss() const { return last_loss_; }
  RunSummary summary() const;

  /// Called on each finished agent trajectory before it enters the buffer.
  std::function<void(Trajectory&)> on_trajectory;
  /// Called after every optimization step.
  std::function<void(const Trainer&)> after_train_step;

 private:
  void begin_episode();
  void finish_episode();
  void maybe_evaluate(bool force);
  void log_record(std::optional<EvalResult> eval);
  void save(const std::filesystem::path& name) const;
  void train_step_bc();

  TrainConfig cfg_;
  envs::EnvSpec spec_;
  ExpertDataset demos_;
  DemoReferences refs_;
  std::uint64_t seed_;
  std::optional<std::filesystem::path> out_dir_;

  ModelBundle model_;
  ModelGrads velocity_;
  Reanalyzer reanalyzer_;
  ReplayBuffer agent_{Origin::kAgent};
  Metrics metrics_;

  RandomStream collect_stream_;
  RandomStream sample_stream_;
  RandomStream gp_stream_;

  std::int64_t env_steps_ = 0;
  std::int64_t train_steps_ = 0;
  std::int64_t episodes_ = 0;
  std::int64_t next_eval_ = 0;

  bool in_episode_ = false;
  bool warmup_episode_ = false;
  envs::EnvState state_;
  Trajectory current_;
  int episode_step_ = 0;

  LossBreakdown last_loss_;
  LossBreakdown loss_acc_;
  int loss_count_ = 0;
  double reward_acc_ = 0.0;
  int reward_count_ = 0;
};

/// Convenience wrapper: build a trainer, run it, write outputs.
Metrics train(const TrainConfig& cfg, const ExpertDataset& demos, const DemoReferences& refs, std::uint64_t seed,
              const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace imitree
