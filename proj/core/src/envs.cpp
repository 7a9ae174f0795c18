#include "imitree/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imitree/error.hpp"
#include "imitree/rng.hpp"

namespace imitree::envs {
namespace {

constexpr double kPi = std::numbers::pi;

// Expert gains.
constexpr double kEnergyGain = 1.0;
constexpr double kPdP = 4.0;
constexpr double kPdD = 1.0;
constexpr double kCatchAngle = 0.5;
constexpr double kReacherP = 4.0;
constexpr double kReacherD = 2.0;

double clip1(double x) { return std::clamp(x, -1.0, 1.0); }

StepResult pendulum_substep(const EnvSpec& s, const EnvState& st, double a) {
  StepResult r;
  r.state = st;
  const double tau = s.max_torque * a;
  const double ml2 = s.mass * s.length * s.length;
  double omega = st.omega + s.dt * (-(3.0 * s.gravity / (2.0 * s.length)) * std::sin(st.theta + kPi) + 3.0 * tau / ml2);
  omega = std::clamp(omega, -s.max_speed, s.max_speed);
  const double theta = wrap_angle(st.theta + s.dt * omega);
  r.state.theta = theta;
  r.state.omega = omega;
  r.env_reward = -(theta * theta + 0.1 * omega * omega + 0.001 * tau * tau);
  return r;
}

StepResult reacher_substep(const EnvSpec& s, const EnvState& st, const Eigen::VectorXd& a) {
  StepResult r;
  r.state = st;
  r.state.vel = (1.0 - s.damping) * st.vel + s.dt * a.head<2>();
  r.state.pos = st.pos + s.dt * r.state.vel;
  r.env_reward = -(r.state.pos - r.state.goal).norm();
  return r;
}

}  // namespace

std::string to_string(EnvId id) {
  return id == EnvId::kPendulumSwingup ? "pendulum-swingup" : "point-reacher";
}

EnvId env_id_from_string(const std::string& name) {
  if (name == "pendulum-swingup" || name == "pendulum") return EnvId::kPendulumSwingup;
  if (name == "point-reacher" || name == "reacher") return EnvId::kPointReacher;
  throw InvalidArgument("unknown environment '" + name + "'");
}

EnvSpec EnvSpec::pendulum() { return EnvSpec{}; }

EnvSpec EnvSpec::reacher() {
  EnvSpec s;
  s.id = EnvId::kPointReacher;
  s.obs_dim = 6;
  s.act_dim = 2;
  s.dt = 0.1;
  s.episode_len = 100;
  s.action_repeat = 1;
  return s;
}

EnvSpec EnvSpec::make(EnvId id) { return id == EnvId::kPendulumSwingup ? pendulum() : reacher(); }

double wrap_angle(double theta) {
  double t = std::fmod(theta + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;
}

EnvState reset(const EnvSpec& spec, std::uint64_t seed) {
  RandomStream rng(derive_seed(seed, {0x656e76}));
  EnvState s;
  if (spec.id == EnvId::kPendulumSwingup) {
    s.theta = wrap_angle(kPi + rng.uniform(-0.05, 0.05));
    s.omega = 0.0;
  } else {
    // Area-uniform on the annulus.
    const double r2 = rng.uniform(spec.goal_radius_min * spec.goal_radius_min, spec.goal_radius_max * spec.goal_radius_max);
    const double angle = rng.uniform(-kPi, kPi);
    s.goal = Eigen::Vector2d(std::cos(angle), std::sin(angle)) * std::sqrt(r2);
  }
  return s;
}

Eigen::VectorXd observe(const EnvSpec& spec, const EnvState& st) {
  Eigen::VectorXd o(spec.obs_dim);
  if (spec.id == EnvId::kPendulumSwingup) {
    o << std::cos(st.theta), std::sin(st.theta), st.omega / spec.max_speed;
  } else {
    o << st.pos, st.vel, st.goal;
  }
  return o;
}

StepResult step(const EnvSpec& spec, const EnvState& state, const Eigen::VectorXd& action) {
  if (action.size() != spec.act_dim) throw InvalidArgument("env step: action dimension mismatch");
  if (!action.allFinite()) throw InvalidArgument("env step: non-finite action");
  const Eigen::VectorXd a = action.unaryExpr([](double x) { return clip1(x); });
  StepResult out;
  out.state = state;
  double total = 0.0;
  for (int k = 0; k < spec.action_repeat; ++k) {
    StepResult r = spec.id == EnvId::kPendulumSwingup ? pendulum_substep(spec, out.state, a(0))
                                                      : reacher_substep(spec, out.state, a);
    out.state = r.state;
    total += r.env_reward;
  }
  const bool finite = spec.id == EnvId::kPendulumSwingup
                          ? std::isfinite(out.state.theta) && std::isfinite(out.state.omega)
                          : out.state.pos.allFinite() && out.state.vel.allFinite();
  if (!finite) throw RuntimeError("env step: non-finite state");
  out.env_reward = total;
  out.observation = observe(spec, out.state);
  return out;
}

double pendulum_energy(const EnvSpec& spec, const EnvState& st) {
  // I*omega^2/2 + (m g l / 2) cos(theta) with I = m l^2 / 3.
  const double inertia = spec.mass * spec.length * spec.length / 3.0;
  return 0.5 * inertia * st.omega * st.omega + 0.5 * spec.mass * spec.gravity * spec.length * std::cos(st.theta);
}

Eigen::VectorXd expert_action(const EnvSpec& spec, const EnvState& st) {
  Eigen::VectorXd a(spec.act_dim);
  if (spec.id == EnvId::kPendulumSwingup) {
    const double theta = wrap_angle(st.theta);
    if (std::abs(theta) > kCatchAngle) {
      const double target = 0.5 * spec.mass * spec.gravity * spec.length;
      const double e = pendulum_energy(spec, st);
      // Torque along omega pumps energy in (dE/dt = omega * tau).
      const double dir = (st.omega + 1e-3) >= 0.0 ? 1.0 : -1.0;
      a(0) = clip1(kEnergyGain * (target - e) * dir);
    } else {
      a(0) = clip1(-kPdP * theta - kPdD * st.omega);
    }
  } else {
    const Eigen::Vector2d u = kReacherP * (st.goal - st.pos) - kReacherD * st.vel;
    a = u.unaryExpr([](double x) { return clip1(x); });
  }
  return a;
}

}  // namespace imitree::envs
