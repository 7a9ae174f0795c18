#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "imitree/losses.hpp"
#include "imitree/mcts.hpp"
#include "imitree/model.hpp"
#include "imitree/optim.hpp"
#include "imitree/reanalyze.hpp"

namespace imitree {

/// Every training hyperparameter. Text form is flat `key = value` lines;
/// `#` starts a comment.
struct TrainConfig {
  std::string env = "pendulum-swingup";
  std::vector<std::uint64_t> seeds{0};

  // objective
  double gamma = 0.99;
  int unroll_steps = 5;
  int td_steps = 1;
  double lambda_policy = 1.0;
  double lambda_value = 1.0;
  double lambda_consistency = 2.0;
  double lambda_disc = 0.1;
  double lambda_gp = 1.0;
  double lambda_bc = 0.01;
  bool detach_disc_encoder = false;

  // search
  int k_samples = 16;
  int n_simulations = 50;
  double bc_mix = 0.25;
  double c1 = 1.25;
  double c2 = 19625.0;
  double dirichlet_xi = 0.3;
  double root_noise_frac = 0.25;
  double collect_temperature = 1.0;
  bool eval_bc_mix = true;

  // reanalyze and target
  int target_interval = 200;
  double reanalyze_ratio = 1.0;
  bool root_value_bootstrap = false;
  bool reanalyze_live_model = false;

  // optimizer
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double max_grad_norm = 10.0;

  // schedule
  int batch_size = 64;
  std::int64_t budget_env_steps = 20000;
  std::int64_t warmup_env_steps = 500;
  std::int64_t eval_interval = 2000;
  int eval_episodes = 10;
  int log_interval = 100;
  bool bc_only = false;

  // model
  int latent_dim = 32;
  int hidden = 64;
  int head_hidden = 64;
  int proj_hidden = 128;
  int proj_dim = 128;
  int pred_hidden = 128;
  double value_min = -40.0;
  double value_max = 40.0;
  int value_bins = 161;

  /// Throws InvalidArgument naming the offending key.
  void validate() const;

  mcts::SearchConfig search_config() const;
  ReanalyzeConfig reanalyze_config() const;
  LossWeights loss_weights() const;
  nn::SgdConfig sgd_config() const;
  ModelConfig model_config(int obs_dim, int act_dim) const;

  /// Every key in a fixed order.
  std::string to_text() const;
  static TrainConfig from_text(const std::string& text);
  static TrainConfig load(const std::string& path);
  /// Applies one `key=value` assignment; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  static std::vector<std::string> keys();
};

}  // namespace imitree
