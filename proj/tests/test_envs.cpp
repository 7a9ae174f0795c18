#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "imitree/envs.hpp"
#include "imitree/error.hpp"
#include "imitree/trainer.hpp"

using namespace imitree;
using namespace imitree::envs;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd act(std::initializer_list<double> v) {
  Eigen::VectorXd a(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) a(i++) = x;
  return a;
}

EnvSpec single_substep(EnvSpec s) {
  s.action_repeat = 1;
  return s;
}

}  // namespace

TEST(Spec, DefaultsAndNames) {
  const auto p = EnvSpec::make("pendulum-swingup");
  EXPECT_EQ(p.id, EnvId::kPendulumSwingup);
  EXPECT_EQ(p.obs_dim, 3);
  EXPECT_EQ(p.act_dim, 1);
  EXPECT_EQ(p.episode_len, 200);
  EXPECT_EQ(p.action_repeat, 2);
  EXPECT_EQ(p.dt, 0.05);
  const auto r = EnvSpec::make("point-reacher");
  EXPECT_EQ(r.id, EnvId::kPointReacher);
  EXPECT_EQ(r.obs_dim, 6);
  EXPECT_EQ(r.act_dim, 2);
  EXPECT_EQ(r.episode_len, 100);
  EXPECT_EQ(r.action_repeat, 1);
  EXPECT_EQ(to_string(p.id), "pendulum-swingup");
  EXPECT_EQ(to_string(r.id), "point-reacher");
  EXPECT_THROW(EnvSpec::make("cartpole"), InvalidArgument);
}

TEST(WrapAngle, RangeAndPeriodicity) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-12);
  EXPECT_EQ(wrap_angle(0.0), 0.0);
  RandomStream s(1);
  for (int i = 0; i < 1000; ++i) {
    const double x = s.uniform(-50, 50);
    const double w = wrap_angle(x);
    EXPECT_GT(w, -kPi);
    EXPECT_LE(w, kPi);
    EXPECT_NEAR(std::cos(w), std::cos(x), 1e-9);
    EXPECT_NEAR(std::sin(w), std::sin(x), 1e-9);
  }
}

TEST(Reset, PendulumHangsNearlyAtRest) {
  const auto spec = EnvSpec::pendulum();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = reset(spec, seed);
    EXPECT_LE(std::abs(wrap_angle(s.theta - kPi)), 0.05 + 1e-12);
    EXPECT_EQ(s.omega, 0.0);
    const auto o = observe(spec, s);
    EXPECT_NEAR(o(0), -1.0, 2e-3);
    EXPECT_NEAR(o(1), std::sin(s.theta), 1e-15);
    EXPECT_EQ(o(2), 0.0);
  }
  EXPECT_EQ(reset(spec, 9).theta, reset(spec, 9).theta);
  EXPECT_NE(reset(spec, 9).theta, reset(spec, 10).theta);
}

TEST(Reset, ReacherGoalsCoverAnnulusUniformly) {
  const auto spec = EnvSpec::reacher();
  constexpr int kSeeds = 10000;
  constexpr int kRadiusBins = 10;
  constexpr int kAngleBins = 12;
  std::array<int, kRadiusBins> radius{};
  std::array<int, kAngleBins> angle{};
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto s = reset(spec, static_cast<std::uint64_t>(seed));
    ASSERT_EQ(s.pos, Eigen::Vector2d::Zero());
    ASSERT_EQ(s.vel, Eigen::Vector2d::Zero());
    const double r = s.goal.norm();
    ASSERT_GE(r, 0.5);
    ASSERT_LE(r, 1.0);
    // Equal-area radius bins: uniform in r^2.
    const double u = (r * r - 0.25) / 0.75;
    ++radius[static_cast<std::size_t>(std::min(kRadiusBins - 1, static_cast<int>(u * kRadiusBins)))];
    const double v = (std::atan2(s.goal(1), s.goal(0)) + kPi) / (2 * kPi);
    ++angle[static_cast<std::size_t>(std::min(kAngleBins - 1, static_cast<int>(v * kAngleBins)))];
    const auto o = observe(spec, s);
    ASSERT_EQ(o.segment(4, 2), s.goal);
  }
  auto chi2 = [](const auto& counts) {
    const double expected = static_cast<double>(kSeeds) / static_cast<double>(counts.size());
    double c = 0.0;
    for (int n : counts) c += (n - expected) * (n - expected) / expected;
    return c;
  };
  // 0.999 quantiles: 27.88 (9 dof), 31.26 (11 dof).
  EXPECT_LT(chi2(radius), 27.88);
  EXPECT_LT(chi2(angle), 31.26);
}

TEST(Step, PendulumHandIntegration) {
  const auto spec = single_substep(EnvSpec::pendulum());
  EnvState s;
  s.theta = kPi / 2;  // horizontal
  s.omega = 0.0;
  const auto r = step(spec, s, act({0.5}));
  // omega = 0.05 * (-(15) * sin(3 pi / 2) + 3 * 1) = 0.9
  EXPECT_NEAR(r.state.omega, 0.9, 1e-12);
  EXPECT_NEAR(r.state.theta, kPi / 2 + 0.045, 1e-12);
  const double th = kPi / 2 + 0.045;
  EXPECT_NEAR(r.env_reward, -(th * th + 0.1 * 0.81 + 0.001 * 1.0), 1e-12);
  EXPECT_NEAR(r.observation(0), std::cos(th), 1e-12);
  EXPECT_NEAR(r.observation(2), 0.9 / 8.0, 1e-12);
}

TEST(Step, PendulumUprightIsEquilibrium) {
  const auto spec = EnvSpec::pendulum();
  EnvState s;
  const auto r = step(spec, s, act({0.0}));
  // sin(0 + pi) is 1.2e-16 in floating point.
  EXPECT_NEAR(r.state.theta, 0.0, 1e-14);
  EXPECT_NEAR(r.state.omega, 0.0, 1e-14);
  EXPECT_NEAR(r.env_reward, 0.0, 1e-14);
}

TEST(Step, PendulumSpeedIsClamped) {
  const auto spec = EnvSpec::pendulum();
  EnvState s;
  s.theta = 0.3;
  s.omega = 7.95;
  const auto r = step(spec, s, act({1.0}));
  EXPECT_EQ(r.state.omega, 8.0);
  s.omega = -7.95;
  s.theta = -0.3;
  EXPECT_EQ(step(spec, s, act({-1.0})).state.omega, -8.0);
}

TEST(Step, ActionRepeatComposesSubsteps) {
  for (const auto& base : {EnvSpec::pendulum(), EnvSpec::reacher()}) {
    auto spec = base;
    spec.action_repeat = 3;
    const auto one = single_substep(base);
    auto s = reset(base, 4);
    s.omega = 0.7;
    s.vel = Eigen::Vector2d(0.2, -0.1);
    const Eigen::VectorXd a = base.act_dim == 1 ? act({0.4}) : act({0.4, -0.8});
    const auto r3 = step(spec, s, a);
    auto st = s;
    double total = 0.0;
    for (int k = 0; k < 3; ++k) {
      const auto r = step(one, st, a);
      st = r.state;
      total += r.env_reward;
    }
    EXPECT_EQ(r3.state.theta, st.theta);
    EXPECT_EQ(r3.state.omega, st.omega);
    EXPECT_EQ(r3.state.pos, st.pos);
    EXPECT_EQ(r3.state.vel, st.vel);
    EXPECT_NEAR(r3.env_reward, total, 1e-12);
  }
}

TEST(Step, ActionsAreClipped) {
  const auto spec = EnvSpec::reacher();
  const auto s = reset(spec, 2);
  EXPECT_EQ(step(spec, s, act({5.0, -3.0})).state.vel, step(spec, s, act({1.0, -1.0})).state.vel);
  const auto p = EnvSpec::pendulum();
  const auto sp = reset(p, 2);
  EXPECT_EQ(step(p, sp, act({7.0})).state.omega, step(p, sp, act({1.0})).state.omega);
}

TEST(Step, RejectsBadActions) {
  const auto spec = EnvSpec::reacher();
  const auto s = reset(spec, 2);
  EXPECT_THROW(step(spec, s, act({0.1})), InvalidArgument);
  EXPECT_THROW(step(spec, s, act({0.1, std::nan("")})), InvalidArgument);
  EXPECT_THROW(step(EnvSpec::pendulum(), reset(EnvSpec::pendulum(), 0), act({INFINITY})), InvalidArgument);
}

TEST(Step, ReacherHandIntegration) {
  const auto spec = EnvSpec::reacher();
  EnvState s;
  s.pos = Eigen::Vector2d(0.1, -0.2);
  s.vel = Eigen::Vector2d(0.5, 0.0);
  s.goal = Eigen::Vector2d(0.6, 0.3);
  const auto r = step(spec, s, act({1.0, -0.5}));
  // vel = 0.95 * (0.5, 0) + 0.1 * (1, -0.5); pos += 0.1 * vel.
  EXPECT_NEAR(r.state.vel(0), 0.575, 1e-12);
  EXPECT_NEAR(r.state.vel(1), -0.05, 1e-12);
  EXPECT_NEAR(r.state.pos(0), 0.1575, 1e-12);
  EXPECT_NEAR(r.state.pos(1), -0.205, 1e-12);
  EXPECT_NEAR(r.env_reward, -std::hypot(0.6 - 0.1575, 0.3 + 0.205), 1e-12);
  EXPECT_EQ(r.state.goal, s.goal);
  EXPECT_EQ(r.observation.head(2), r.state.pos);
  EXPECT_EQ(r.observation.segment(2, 2), r.state.vel);
}

TEST(Step, ReacherConstantThrustApproachesUntilOvershoot) {
  const auto spec = EnvSpec::reacher();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto s = reset(spec, seed);
    const Eigen::VectorXd a = s.goal.normalized();
    double prev = s.goal.norm();
    bool overshot = false;
    for (int t = 0; t < spec.episode_len; ++t) {
      s = step(spec, s, a).state;
      const double d = (s.goal - s.pos).norm();
      const bool past = (s.goal - s.pos).dot(s.goal) < 0.0;
      if (!past) {
        EXPECT_LT(d, prev) << "seed " << seed << " t " << t;
      } else {
        overshot = true;
        EXPECT_GT(d, 0.0);
      }
      prev = d;
    }
    EXPECT_TRUE(overshot);
  }
}

TEST(Energy, ReferenceLevels) {
  const auto spec = EnvSpec::pendulum();
  EnvState up, down, side;
  down.theta = kPi;
  side.theta = kPi / 2;
  side.omega = 3.0;
  EXPECT_NEAR(pendulum_energy(spec, up), 5.0, 1e-12);
  EXPECT_NEAR(pendulum_energy(spec, down), -5.0, 1e-12);
  EXPECT_NEAR(pendulum_energy(spec, side), 0.5 * (1.0 / 3.0) * 9.0, 1e-12);
}

TEST(Energy, ConservedWithoutTorqueForSmallSteps) {
  auto spec = single_substep(EnvSpec::pendulum());
  spec.dt = 1e-4;
  EnvState s;
  s.theta = 2.0;
  const double e0 = pendulum_energy(spec, s);
  for (int t = 0; t < 30000; ++t) {
    s = step(spec, s, act({0.0})).state;
    ASSERT_NEAR(pendulum_energy(spec, s), e0, 0.01);
  }
}

TEST(Energy, TorqueAlongOmegaAddsEnergy) {
  const auto spec = single_substep(EnvSpec::pendulum());
  RandomStream r(5);
  for (int i = 0; i < 200; ++i) {
    EnvState s;
    s.theta = r.uniform(-kPi, kPi);
    s.omega = r.uniform(0.5, 4.0) * (r.uniform() < 0.5 ? -1.0 : 1.0);
    const double dir = s.omega > 0 ? 1.0 : -1.0;
    const double with = pendulum_energy(spec, step(spec, s, act({dir})).state);
    const double against = pendulum_energy(spec, step(spec, s, act({-dir})).state);
    EXPECT_GT(with, against);
  }
}

TEST(Expert, ReacherSettlesOnEverySeed) {
  const auto spec = EnvSpec::reacher();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto s = reset(spec, seed);
    for (int t = 0; t < spec.episode_len; ++t) {
      const auto a = expert_action(spec, s);
      ASSERT_LE(a.cwiseAbs().maxCoeff(), 1.0);
      s = step(spec, s, a).state;
    }
    EXPECT_LT((s.pos - s.goal).norm(), 0.05) << "seed " << seed;
  }
}

TEST(Expert, PendulumSwingsUpAndHolds) {
  const auto spec = EnvSpec::pendulum();
  RandomStream stream(6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = run_episode(spec, expert_actor(spec), seed, Origin::kExpert, stream);
    std::string why;
    EXPECT_TRUE(demo_succeeded(spec, t, &why)) << "seed " << seed << ": " << why;
    const auto& o = t.observations().back();
    EXPECT_LT(std::abs(std::atan2(o(1), o(0))), 0.05) << "seed " << seed;
  }
}

TEST(Expert, PendulumCatchUsesPd) {
  const auto spec = EnvSpec::pendulum();
  EnvState s;
  s.theta = 0.1;
  s.omega = -0.2;
  EXPECT_NEAR(expert_action(spec, s)(0), -4.0 * 0.1 + 0.2, 1e-12);
  s.theta = 0.4;
  s.omega = 0.5;
  EXPECT_EQ(expert_action(spec, s)(0), -1.0);
}

TEST(Expert, PendulumPumpsEnergyWhenLow) {
  const auto spec = EnvSpec::pendulum();
  EnvState s;
  s.theta = kPi - 0.3;
  s.omega = 1.0;
  // Far below the upright energy: full torque along omega.
  EXPECT_EQ(expert_action(spec, s)(0), 1.0);
  s.omega = -1.0;
  EXPECT_EQ(expert_action(spec, s)(0), -1.0);
}
