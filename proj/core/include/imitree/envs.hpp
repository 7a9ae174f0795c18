#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace imitree::envs {

enum class EnvId { kPendulumSwingup, kPointReacher };

std::string to_string(EnvId id);
EnvId env_id_from_string(const std::string& name);

struct EnvSpec {
  EnvId id = EnvId::kPendulumSwingup;
  int obs_dim = 3;
  int act_dim = 1;
  double dt = 0.05;
  int episode_len = 200;  // control steps
  int action_repeat = 2;  // underlying steps per control step

  // pendulum
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double max_torque = 2.0;
  double max_speed = 8.0;

  // reacher
  double damping = 0.05;
  double goal_radius_min = 0.5;
  double goal_radius_max = 1.0;

  static EnvSpec pendulum();
  static EnvSpec reacher();
  static EnvSpec make(EnvId id);
  static EnvSpec make(const std::string& name) { return make(env_id_from_string(name)); }
};

struct EnvState {
  // pendulum: theta in (-pi, pi], 0 is upright
  double theta = 0.0;
  double omega = 0.0;
  // reacher
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  Eigen::Vector2d vel = Eigen::Vector2d::Zero();
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
};

struct StepResult {
  EnvState state;
  Eigen::VectorXd observation;
  double env_reward = 0.0;  // evaluation only
};

double wrap_angle(double theta);

EnvState reset(const EnvSpec& spec, std::uint64_t seed);
Eigen::VectorXd observe(const EnvSpec& spec, const EnvState& state);

/// One control step: applies `action` for `action_repeat` underlying steps and
/// sums their rewards. Actions are clipped to [-1, 1].
StepResult step(const EnvSpec& spec, const EnvState& state, const Eigen::VectorXd& action);

/// Scripted controller used to produce demonstrations.
Eigen::VectorXd expert_action(const EnvSpec& spec, const EnvState& state);

/// Pendulum energy with zero at the horizontal; upright rest is the maximum.
double pendulum_energy(const EnvSpec& spec, const EnvState& state);

}  // namespace imitree::envs
