#include "imitree/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "imitree/ail.hpp"
#include "imitree/error.hpp"
#include "imitree/optim.hpp"

namespace imitree {

Actor expert_actor(const envs::EnvSpec& spec) {
  return [spec](const envs::EnvState& s, const Eigen::VectorXd&, RandomStream&) { return envs::expert_action(spec, s); };
}

Actor random_actor(const envs::EnvSpec& spec) {
  return [d = spec.act_dim](const envs::EnvState&, const Eigen::VectorXd&, RandomStream& stream) {
    Eigen::VectorXd a(d);
    for (int i = 0; i < d; ++i) a(i) = stream.uniform(-1.0, 1.0);
    return a;
  };
}

Actor search_actor(const ModelBundle& model, const mcts::SearchConfig& cfg, double temperature, bool root_noise) {
  return [&model, cfg, temperature, root_noise](const envs::EnvState&, const Eigen::VectorXd& obs,
                                                RandomStream& stream) {
    const mcts::BundleSearchModel sm(model);
    mcts::SearchOptions opt;
    opt.root_noise = root_noise;
    const auto result = mcts::run_search(obs, sm, cfg, stream, opt);
    return mcts::act(result, temperature, stream);
  };
}

Actor bc_actor(const ModelBundle& model) {
  return [&model](const envs::EnvState&, const Eigen::VectorXd& obs, RandomStream&) {
    return Eigen::VectorXd(model.predict_bc(model.represent(obs)).mean.array().tanh());
  };
}

Actor policy_actor(const ModelBundle& model) {
  return [&model](const envs::EnvState&, const Eigen::VectorXd& obs, RandomStream&) {
    return Eigen::VectorXd(model.predict_policy(model.represent(obs)).mean.array().tanh());
  };
}

Trajectory run_episode(const envs::EnvSpec& spec, const Actor& actor, std::uint64_t reset_seed, Origin source,
                       RandomStream& stream) {
  envs::EnvState state = envs::reset(spec, reset_seed);
  Trajectory traj(source, reset_seed, envs::observe(spec, state));
  for (int t = 0; t < spec.episode_len; ++t) {
    const Eigen::VectorXd a = actor(state, traj.observations().back(), stream).cwiseMax(-1.0).cwiseMin(1.0);
    auto r = envs::step(spec, state, a);
    traj.append(a, r.observation, r.env_reward);
    state = r.state;
  }
  return traj;
}

Trajectory collect_episode(const envs::EnvSpec& spec, const ModelBundle& model, const mcts::SearchConfig& cfg,
                           std::uint64_t reset_seed, RandomStream& stream, double temperature) {
  return run_episode(spec, search_actor(model, cfg, temperature, true), reset_seed, Origin::kAgent, stream);
}

double normalized_score(double j, double j_expert, double j_random) {
  const double span = j_expert - j_random;
  if (!(std::abs(span) > 1e-12)) throw InvalidArgument("normalized_score: expert and random returns coincide");
  return (j - j_random) / span;
}

EvalResult evaluate(const envs::EnvSpec& spec, const Actor& actor, int episodes, std::uint64_t seed,
                    const DemoReferences& refs) {
  if (episodes < 1) throw InvalidArgument("evaluate: need at least one episode");
  EvalResult out;
  RandomStream stream(derive_seed(seed, {0}));
  double sum = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto traj = run_episode(spec, actor, derive_seed(seed, {1, static_cast<std::uint64_t>(e)}), Origin::kAgent,
                                  stream);
    out.returns.push_back(traj.env_return());
    sum += out.returns.back();
  }
  out.mean_return = sum / episodes;
  out.normalized = normalized_score(out.mean_return, refs.j_expert, refs.j_random);
  return out;
}

bool demo_succeeded(const envs::EnvSpec& spec, const Trajectory& traj, std::string* why) {
  auto fail = [why](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (spec.id == envs::EnvId::kPendulumSwingup) {
    int first = -1;
    for (std::size_t t = 0; t < traj.observations().size(); ++t) {
      const auto& o = traj.observation(t);
      const double theta = std::atan2(o(1), o(0));
      if (std::abs(theta) < 0.2) {
        if (first < 0) first = static_cast<int>(t);
      } else if (first >= 0) {
        std::ostringstream os;
        os << "pendulum left the upright band at step " << t << " (theta " << theta << ")";
        return fail(os.str());
      }
    }
    if (first < 0) return fail("pendulum never reached |theta| < 0.2");
    return true;
  }
  const auto& o = traj.observations().back();
  const double dist = (o.segment(0, 2) - o.segment(4, 2)).norm();
  if (dist >= 0.05) return fail("reacher final distance " + std::to_string(dist) + " >= 0.05");
  return true;
}

GeneratedDemos generate_demos(const envs::EnvSpec& spec, int n, std::uint64_t seed, int random_episodes) {
  if (n < 1) throw InvalidArgument("generate_demos: n must be >= 1");
  if (random_episodes < 1) throw InvalidArgument("generate_demos: random_episodes must be >= 1");
  GeneratedDemos out;
  out.file.env = envs::to_string(spec.id);
  out.file.obs_dim = spec.obs_dim;
  out.file.act_dim = spec.act_dim;
  RandomStream stream(derive_seed(seed, {12}));
  const Actor expert = expert_actor(spec);
  double j_expert = 0.0;
  for (int i = 0; i < n; ++i) {
    auto traj = run_episode(spec, expert, derive_seed(seed, {10, static_cast<std::uint64_t>(i)}), Origin::kExpert,
                            stream);
    std::string why;
    if (!demo_succeeded(spec, traj, &why)) {
      throw RuntimeError("expert demo " + std::to_string(i) + " failed: " + why);
    }
    j_expert += traj.env_return();
    out.file.trajectories.push_back(std::move(traj));
  }
  const Actor random = random_actor(spec);
  double j_random = 0.0;
  for (int i = 0; i < random_episodes; ++i) {
    j_random += run_episode(spec, random, derive_seed(seed, {11, static_cast<std::uint64_t>(i)}), Origin::kAgent,
                            stream)
                    .env_return();
  }
  out.refs.env = out.file.env;
  out.refs.n_demos = n;
  out.refs.seed = seed;
  out.refs.j_expert = j_expert / n;
  out.refs.j_random = j_random / random_episodes;
  out.refs.random_episodes = random_episodes;
  out.refs.git_describe = git_describe();
  if (!(out.refs.j_expert > out.refs.j_random)) throw RuntimeError("generate_demos: expert does not beat random");
  return out;
}

Trainer::Trainer(TrainConfig cfg, ExpertDataset demos, DemoReferences refs, std::uint64_t seed,
                 std::optional<std::filesystem::path> out_dir)
    : cfg_(std::move(cfg)),
      spec_(envs::EnvSpec::make(cfg_.env)),
      demos_(std::move(demos)),
      refs_(std::move(refs)),
      seed_(seed),
      out_dir_(std::move(out_dir)),
      reanalyzer_(cfg_.reanalyze_config(), derive_seed(seed, {2})),
      collect_stream_(derive_seed(seed, {3})),
      sample_stream_(derive_seed(seed, {4})),
      gp_stream_(derive_seed(seed, {5})) {
  cfg_.validate();
  if (demos_.empty()) throw InvalidArgument("Trainer: no demonstrations");
  const auto& d0 = demos_.demo(0);
  if (d0.observation(0).size() != spec_.obs_dim || d0.action(0).size() != spec_.act_dim) {
    throw InvalidArgument("Trainer: demonstrations do not match environment '" + cfg_.env + "'");
  }
  model_ = ModelBundle(cfg_.model_config(spec_.obs_dim, spec_.act_dim), derive_seed(seed, {1}));
  velocity_ = model_.zero_grads();
  next_eval_ = cfg_.eval_interval;
}

void Trainer::begin_episode() {
  warmup_episode_ = env_steps_ < cfg_.warmup_env_steps;
  const std::uint64_t reset_seed = derive_seed(seed_, {7, static_cast<std::uint64_t>(episodes_)});
  state_ = envs::reset(spec_, reset_seed);
  current_ = Trajectory(Origin::kAgent, reset_seed, envs::observe(spec_, state_));
  episode_step_ = 0;
  in_episode_ = true;
}

void Trainer::finish_episode() {
  in_episode_ = false;
  ++episodes_;
  if (current_.length() == 0) return;
  if (on_trajectory) on_trajectory(current_);
  agent_.push(std::move(current_));
}

bool Trainer::advance() {
  if (env_steps_ >= cfg_.budget_env_steps) return false;
  if (!in_episode_) begin_episode();
  const Eigen::VectorXd& obs = current_.observations().back();
  Eigen::VectorXd a;
  if (warmup_episode_) {
    a = random_actor(spec_)(state_, obs, collect_stream_);
  } else {
    a = search_actor(model_, cfg_.search_config(), cfg_.collect_temperature, true)(state_, obs, collect_stream_);
    reward_acc_ += ail::ail_reward(model_.discriminate(model_.represent(obs), a));
    ++reward_count_;
  }
  auto r = envs::step(spec_, state_, a);
  current_.append(a, r.observation, r.env_reward);
  state_ = r.state;
  env_steps_ += spec_.action_repeat;
  ++episode_step_;
  if (episode_step_ >= spec_.episode_len || env_steps_ >= cfg_.budget_env_steps) finish_episode();
  if (env_steps_ > cfg_.warmup_env_steps && !agent_.empty()) train_step();
  maybe_evaluate(false);
  return true;
}

void Trainer::train_step() {
  model_.step_counter = train_steps_;
  if (should_refresh_target(train_steps_, cfg_.target_interval)) reanalyzer_.set_target(snapshot_target(model_));
  const UnrollBatch agent = agent_.sample_unroll(cfg_.batch_size, cfg_.unroll_steps, sample_stream_);
  const UnrollBatch expert = demos_.buffer().sample_unroll(cfg_.batch_size, cfg_.unroll_steps, sample_stream_);
  const TargetBatch agent_targets = reanalyzer_.run(agent, model_);
  const TargetBatch expert_targets = reanalyzer_.run(expert, model_);
  LossResult loss = total_loss(model_, agent, agent_targets, expert, expert_targets, cfg_.loss_weights(), gp_stream_);

  std::array<nn::GradientSet*, kNumNets> sets;
  for (std::size_t i = 0; i < kNumNets; ++i) sets[i] = &loss.grads.sets[i];
  const auto sgd = cfg_.sgd_config();
  nn::clip_global_norm(sets, sgd.max_grad_norm);
  for (std::size_t i = 0; i < kNumNets; ++i) {
    nn::sgd_momentum_step(model_.net(static_cast<Net>(i)), loss.grads.sets[i], velocity_.sets[i], sgd);
  }
  ++train_steps_;
  model_.step_counter = train_steps_;

  last_loss_ = loss.parts;
  auto& acc = loss_acc_;
  acc.total += loss.parts.total;
  acc.policy += loss.parts.policy;
  acc.value += loss.parts.value;
  acc.consistency += loss.parts.consistency;
  acc.disc += loss.parts.disc;
  acc.gradient_penalty += loss.parts.gradient_penalty;
  acc.bc += loss.parts.bc;
  ++loss_count_;
  if (after_train_step) after_train_step(*this);
  if (train_steps_ % cfg_.log_interval == 0) log_record(std::nullopt);
}

void Trainer::train_step_bc() {
  model_.step_counter = train_steps_;
  const UnrollBatch expert = demos_.buffer().sample_unroll(cfg_.batch_size, 0, sample_stream_);
  LossResult loss = bc_only_loss(model_, expert);
  std::array<nn::GradientSet*, 2> sets{&loss.grads[Net::kRepresentation], &loss.grads[Net::kBcPolicy]};
  const auto sgd = cfg_.sgd_config();
  nn::clip_global_norm(sets, sgd.max_grad_norm);
  for (Net n : {Net::kRepresentation, Net::kBcPolicy}) {
    nn::sgd_momentum_step(model_.net(n), loss.grads[n], velocity_[n], sgd);
  }
  ++train_steps_;
  model_.step_counter = train_steps_;
  last_loss_ = loss.parts;
  loss_acc_.total += loss.parts.total;
  loss_acc_.bc += loss.parts.bc;
  ++loss_count_;
  if (after_train_step) after_train_step(*this);
  if (train_steps_ % cfg_.log_interval == 0) log_record(std::nullopt);
}

EvalResult Trainer::evaluate_now() const {
  if (cfg_.bc_only) return evaluate(spec_, bc_actor(model_), cfg_.eval_episodes, derive_seed(seed_, {6}), refs_);
  auto search = cfg_.search_config();
  if (!cfg_.eval_bc_mix) search.bc_mix = 0.0;
  return evaluate(spec_, search_actor(model_, search, 0.0, false), cfg_.eval_episodes, derive_seed(seed_, {6}), refs_);
}

void Trainer::log_record(std::optional<EvalResult> eval) {
  MetricRecord r;
  r.env_steps = env_steps_;
  r.train_steps = train_steps_;
  if (loss_count_ > 0) {
    const double k = loss_count_;
    r.loss = loss_acc_;
    r.loss.total /= k;
    r.loss.policy /= k;
    r.loss.value /= k;
    r.loss.consistency /= k;
    r.loss.disc /= k;
    r.loss.gradient_penalty /= k;
    r.loss.bc /= k;
  }
  if (reward_count_ > 0) r.mean_ail_reward = reward_acc_ / reward_count_;
  if (eval) {
    r.eval_return = eval->mean_return;
    r.eval_score = eval->normalized;
  }
  metrics_.append(std::move(r));
  loss_acc_ = {};
  loss_count_ = 0;
  reward_acc_ = 0.0;
  reward_count_ = 0;
}

void Trainer::maybe_evaluate(bool force) {
  // BC-only runs count optimization steps at the control rate.
  const std::int64_t progress = cfg_.bc_only ? train_steps_ * spec_.action_repeat : env_steps_;
  if (!force && progress < next_eval_) return;
  while (next_eval_ <= progress) next_eval_ += cfg_.eval_interval;
  log_record(evaluate_now());
  if (out_dir_) save("checkpoint.bin");
}

void Trainer::save(const std::filesystem::path& name) const {
  std::filesystem::create_directories(*out_dir_);
  save_checkpoint(*out_dir_ / name, model_, velocity_, cfg_.to_text());
}

const Metrics& Trainer::run() {
  try {
    if (cfg_.bc_only) {
      while (train_steps_ * spec_.action_repeat < cfg_.budget_env_steps) {
        train_step_bc();
        maybe_evaluate(false);
      }
    } else {
      while (advance()) {
      }
    }
    const bool did_work = env_steps_ > 0 || train_steps_ > 0;
    const auto last = metrics_.last_eval();
    if (did_work && (!last || last->train_steps != train_steps_ || last->env_steps != env_steps_)) {
      maybe_evaluate(true);
    }
    if (out_dir_) save("checkpoint.bin");
  } catch (...) {
    if (out_dir_) {
      try {
        save("checkpoint-abort.bin");
      } catch (...) {
      }
    }
    throw;
  }
  return metrics_;
}

RunSummary Trainer::summary() const {
  RunSummary s;
  s.env = cfg_.env;
  s.seed = seed_;
  s.seeds = cfg_.seeds;
  s.env_steps = env_steps_;
  s.train_steps = train_steps_;
  if (const auto last = metrics_.last_eval()) {
    s.final_return = last->eval_return;
    s.final_score = last->eval_score;
  }
  s.steps_to_half = metrics_.steps_to_score(0.5);
  s.j_expert = refs_.j_expert;
  s.j_random = refs_.j_random;
  s.config_text = cfg_.to_text();
  s.git_describe = git_describe();
  return s;
}

Metrics train(const TrainConfig& cfg, const ExpertDataset& demos, const DemoReferences& refs, std::uint64_t seed,
              const std::optional<std::filesystem::path>& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(cfg, demos, refs, seed, out_dir);
  trainer.run();
  if (out_dir) {
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_run_outputs(*out_dir, trainer.metrics(), trainer.summary(), wall);
  }
  return trainer.metrics();
}

}  // namespace imitree
