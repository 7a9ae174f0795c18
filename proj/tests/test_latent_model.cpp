#include <gtest/gtest.h>

#include <filesystem>

#include "imitree/error.hpp"
#include "imitree/losses.hpp"
#include "imitree/model.hpp"
#include "imitree/unroll.hpp"
#include "support/fd.hpp"
#include "support/fixtures.hpp"

using namespace imitree;
using namespace imitree::test_support;

namespace {

Eigen::VectorXd random_vec(int d, RandomStream& s, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v(i) = s.uniform(-scale, scale);
  return v;
}

// Predictor hidden width 2 * proj_dim so it can represent x -> R x exactly:
// relu(x) - relu(-x) = x.
ModelConfig identity_capable_config() {
  auto c = tiny_model_config(3, 2);
  c.pred_hidden = 2 * c.proj_dim;
  return c;
}

void set_predictor_linear(ModelBundle& m, const Eigen::MatrixXd& r) {
  const int p = m.config().proj_dim;
  auto& layers = m.net(Net::kPredictor).mutable_layers();
  layers[0].weight.setZero();
  layers[0].weight.topRows(p) = Eigen::MatrixXd::Identity(p, p);
  layers[0].weight.bottomRows(p) = -Eigen::MatrixXd::Identity(p, p);
  layers[0].bias.setZero();
  layers[1].weight.leftCols(p) = r;
  layers[1].weight.rightCols(p) = -r;
  layers[1].bias.setZero();
}

}  // namespace

TEST(ZeroInit, HeadsStartExactly) {
  for (std::uint64_t seed : {0ull, 1ull, 77ull}) {
    ModelBundle m(ModelConfig{}, seed);
    RandomStream s(seed);
    for (int t = 0; t < 50; ++t) {
      const auto h = m.represent(random_vec(3, s, 5.0));
      const Eigen::VectorXd a = random_vec(1, s);
      EXPECT_EQ(m.discriminate(h, a), 0.5);
      EXPECT_EQ(m.predict_value(h), 0.0);
      const auto pol = m.predict_policy(h);
      EXPECT_EQ(pol.mean(0), 0.0);
      EXPECT_EQ(pol.log_std(0), 0.0);
      const auto bc = m.predict_bc(h);
      EXPECT_EQ(bc.mean(0), 0.0);
      EXPECT_EQ(bc.log_std(0), 0.0);
    }
  }
}

TEST(ZeroInit, DimensionsAreConsistent) {
  ModelConfig c;
  c.obs_dim = 6;
  c.act_dim = 2;
  ModelBundle m(c, 3);
  EXPECT_EQ(m.net(Net::kRepresentation).input_dim(), 6);
  EXPECT_EQ(m.net(Net::kRepresentation).output_dim(), 32);
  EXPECT_EQ(m.net(Net::kDynamics).input_dim(), 34);
  EXPECT_EQ(m.net(Net::kDynamics).output_dim(), 32);
  EXPECT_EQ(m.net(Net::kValue).output_dim(), c.value_bins);
  EXPECT_EQ(m.net(Net::kPolicy).output_dim(), 4);
  EXPECT_EQ(m.net(Net::kBcPolicy).output_dim(), 4);
  EXPECT_EQ(m.net(Net::kDiscriminator).input_dim(), 34);
  EXPECT_EQ(m.net(Net::kDiscriminator).output_dim(), 1);
  EXPECT_EQ(m.net(Net::kPredictor).input_dim(), m.net(Net::kProjector).output_dim());
}

TEST(Represent, DeterministicAndDistinct) {
  ModelBundle m(ModelConfig{}, 5);
  RandomStream s(2);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd o1 = random_vec(3, s), o2 = random_vec(3, s);
    EXPECT_EQ(m.represent(o1).h, m.represent(o1).h);
    EXPECT_GT((m.represent(o1).h - m.represent(o2).h).norm(), 0.0);
  }
}

TEST(Represent, DimensionMismatchThrows) {
  ModelBundle m(ModelConfig{}, 5);
  EXPECT_THROW(m.represent(Eigen::VectorXd::Zero(4)), InvalidArgument);
  EXPECT_THROW(m.dynamics(m.represent(Eigen::VectorXd::Zero(3)), Eigen::VectorXd::Zero(2)), InvalidArgument);
}

TEST(Represent, ZeroBiasIdentityStub) {
  // One hidden layer equal to the identity with zero biases: leaky-relu of a
  // zero observation is zero, so the latent is exactly zero.
  auto c = tiny_model_config(3, 1);
  c.latent_dim = 3;
  c.hidden = 3;
  ModelBundle m(c, 0);
  for (auto& l : m.net(Net::kRepresentation).mutable_layers()) {
    l.weight = Eigen::MatrixXd::Identity(3, 3);
    l.bias.setZero();
  }
  EXPECT_TRUE(m.represent(Eigen::VectorXd::Zero(3)).h.isZero(0.0));
  Eigen::Vector3d o(1.0, -2.0, 0.5);
  EXPECT_TRUE(m.represent(o).h.isApprox(Eigen::Vector3d(1.0, -0.02, 0.5), 1e-15));
}

TEST(Dynamics, ZeroWeightsGiveBias) {
  ModelBundle m(tiny_model_config(3, 1), 4);
  auto& layers = m.net(Net::kDynamics).mutable_layers();
  layers[0].weight.setZero();
  layers[0].bias.setZero();
  layers[1].weight.setZero();
  layers[1].bias = Eigen::Vector4d(0.1, -0.2, 0.3, 0.4);
  const auto next = m.dynamics(m.represent(Eigen::Vector3d(1, 2, 3)), Eigen::VectorXd::Constant(1, 0.5));
  EXPECT_EQ(next.h, layers[1].bias);
}

TEST(Dynamics, NonFiniteLatentThrows) {
  ModelBundle m(tiny_model_config(3, 1), 4);
  m.net(Net::kDynamics).mutable_layers()[1].bias(0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(m.dynamics(m.represent(Eigen::Vector3d(1, 2, 3)), Eigen::VectorXd::Zero(1)), RuntimeError);
}

TEST(Dynamics, BatchedUnrollEqualsRepeatedComposition) {
  ModelBundle m(tiny_model_config(3, 2), 9);
  const auto buf = random_buffer(Origin::kAgent, 3, 2, {12, 9}, 1);
  const auto batch = buf.make_unroll({{0, 0}, {1, 3}, {0, 6}}, 5);
  const Unroll u = unroll_latents(m, batch);
  ASSERT_EQ(u.positions(), 6);
  for (int b = 0; b < 3; ++b) {
    LatentState h = m.represent(batch.observations[0].col(b));
    for (int i = 0; i <= 5; ++i) {
      EXPECT_LT((u.latents[static_cast<std::size_t>(i)].col(b) - h.h).norm(), 1e-12) << "row " << b << " pos " << i;
      h = m.dynamics(h, batch.actions[static_cast<std::size_t>(i)].col(b));
    }
  }
}

TEST(Dynamics, ActionGradientFiniteDifference) {
  ModelBundle m(tiny_model_config(3, 2), 10);
  RandomStream s(3);
  for (int t = 0; t < 10; ++t) {
    const LatentState h{random_vec(4, s)};
    const Eigen::VectorXd a = random_vec(2, s, 0.9);
    const Eigen::VectorXd c = random_vec(4, s);
    nn::MlpTape tape;
    m.net(Net::kDynamics).forward(concat(h.h, a), &tape);
    const Eigen::VectorXd grad = m.net(Net::kDynamics).input_gradient(tape, c);
    for (int k = 0; k < 2; ++k) {
      Eigen::VectorXd ap = a, am = a;
      ap(k) += 1e-6;
      am(k) -= 1e-6;
      const double fd = (c.dot(m.dynamics(h, ap).h) - c.dot(m.dynamics(h, am).h)) / 2e-6;
      EXPECT_LT(rel_err(fd, grad(4 + k), 1e-8), 1e-4);
    }
  }
}

TEST(Discriminator, OutputClamped) {
  ModelBundle m(tiny_model_config(3, 1), 1);
  const auto h = m.represent(Eigen::Vector3d(0.1, 0.2, 0.3));
  m.net(Net::kDiscriminator).mutable_layers()[1].bias(0) = 100.0;
  EXPECT_EQ(m.discriminate(h, Eigen::VectorXd::Zero(1)), 1.0 - kDiscClamp);
  m.net(Net::kDiscriminator).mutable_layers()[1].bias(0) = -100.0;
  EXPECT_EQ(m.discriminate(h, Eigen::VectorXd::Zero(1)), kDiscClamp);
}

TEST(Consistency, IdenticalBranchesGiveMinusOne) {
  ModelBundle m(identity_capable_config(), 2);
  set_predictor_linear(m, Eigen::MatrixXd::Identity(4, 4));
  const Eigen::Vector3d o(0.3, -0.1, 0.8);
  EXPECT_NEAR(m.consistency_loss(m.represent(o), o), -1.0, 1e-12);
}

TEST(Consistency, OrthogonalBranchesGiveZero) {
  ModelBundle m(identity_capable_config(), 2);
  Eigen::Matrix4d r;
  r << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, -1, 0, 0, 1, 0;
  set_predictor_linear(m, r);
  const Eigen::Vector3d o(0.3, -0.1, 0.8);
  EXPECT_NEAR(m.consistency_loss(m.represent(o), o), 0.0, 1e-12);
}

TEST(Consistency, RangeProperty) {
  ModelBundle m(tiny_model_config(3, 1), 12);
  RandomStream s(9);
  for (int t = 0; t < 100; ++t) {
    const double l = m.consistency_loss(LatentState{random_vec(4, s, 3.0)}, random_vec(3, s));
    EXPECT_GE(l, -1.0);
    EXPECT_LE(l, 1.0);
  }
}

TEST(Consistency, ZeroNormProjectionThrows) {
  ModelBundle m(tiny_model_config(3, 1), 12);
  for (auto& l : m.net(Net::kPredictor).mutable_layers()) {
    l.weight.setZero();
    l.bias.setZero();
  }
  EXPECT_THROW(m.consistency_loss(LatentState{Eigen::Vector4d::Ones()}, Eigen::Vector3d::Ones()), RuntimeError);
}

// Stop-gradient oracle: the analytic gradient of the consistency term equals
// finite differences of a loss whose target branch is evaluated on a frozen
// copy of the parameters, so perturbations reach the online branch only.
TEST(Consistency, TargetBranchCarriesNoGradient) {
  const auto cfg = tiny_model_config(3, 2);
  ModelBundle m(cfg, 21);
  randomize(m, 22);
  const ModelBundle frozen = m;
  const auto agent_buf = random_buffer(Origin::kAgent, 3, 2, {8, 4}, 2);
  const auto expert_buf = random_buffer(Origin::kExpert, 3, 2, {9}, 3);
  const auto agent = agent_buf.make_unroll({{0, 1}, {1, 2}}, 3);
  const auto expert = expert_buf.make_unroll({{0, 0}, {0, 7}}, 3);
  const auto ta = random_targets(agent, 2, 3, 4);
  const auto te = random_targets(expert, 2, 3, 5);
  LossWeights w;
  w.policy = w.value = w.disc = w.gradient_penalty = w.bc = 0.0;
  w.consistency = 1.0;
  const Eigen::VectorXd mix = Eigen::VectorXd::Constant(2, 0.5);
  const auto result = total_loss(m, agent, ta, expert, te, w, mix);

  auto frozen_target_loss = [&] {
    double sum = 0.0;
    for (const UnrollBatch* b : {&agent, &expert}) {
      for (int r = 0; r < b->batch_size(); ++r) {
        LatentState h = m.represent(b->observations[0].col(r));
        for (int i = 1; i <= b->unroll_steps; ++i) {
          h = m.dynamics(h, b->actions[static_cast<std::size_t>(i - 1)].col(r));
          if (b->mask(i - 1, r) <= 0.0) continue;
          const Eigen::VectorXd online = m.net(Net::kPredictor).infer(m.net(Net::kProjector).infer(h.h));
          const Eigen::VectorXd target = frozen.net(Net::kProjector).infer(
              frozen.represent(b->observations[static_cast<std::size_t>(i)].col(r)).h);
          sum -= online.dot(target) / (online.norm() * target.norm());
        }
      }
    }
    return sum / 4.0;
  };
  EXPECT_NEAR(frozen_target_loss(), result.parts.consistency, 1e-12);
  EXPECT_LT(fd_check_bundle(m, result.grads, frozen_target_loss, 1e-5, 1e-7), 1e-4);
}

TEST(Target, SnapshotIsImmutable) {
  ModelBundle m(tiny_model_config(3, 1), 3);
  randomize(m, 4);
  m.step_counter = 400;
  const TargetModel t = snapshot_target(m);
  EXPECT_EQ(t.snapshot_step(), 400);
  const Eigen::Vector3d o(0.1, 0.5, -0.3);
  const double v_before = t.model().predict_value(t.model().represent(o));
  m.net(Net::kValue).mutable_layers()[1].bias.array() += 1.0;
  m.net(Net::kRepresentation).mutable_layers()[0].bias.array() += 1.0;
  EXPECT_EQ(t.model().predict_value(t.model().represent(o)), v_before);
  EXPECT_NE(m.predict_value(m.represent(o)), v_before);
}

TEST(Target, RefreshSchedule) {
  EXPECT_TRUE(should_refresh_target(0));
  EXPECT_TRUE(should_refresh_target(200));
  EXPECT_TRUE(should_refresh_target(400));
  for (int s = 1; s < 200; ++s) EXPECT_FALSE(should_refresh_target(s));
  EXPECT_THROW(should_refresh_target(5, 0), InvalidArgument);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto cfg = tiny_model_config(6, 2);
  ModelBundle m(cfg, 3);
  randomize(m, 5);
  m.step_counter = 1234;
  ModelGrads vel = m.zero_grads();
  RandomStream s(8);
  for (auto& set : vel.sets)
    for (auto& l : set.layers) l.weight.setRandom();
  const auto path = std::filesystem::temp_directory_path() / "imitree_ckpt_roundtrip.bin";
  save_checkpoint(path, m, vel, "k = v\n");
  const auto back = load_checkpoint(path, cfg);
  EXPECT_TRUE(back.model == m);
  EXPECT_EQ(back.config_text, "k = v\n");
  for (std::size_t n = 0; n < kNumNets; ++n)
    for (std::size_t l = 0; l < vel.sets[n].layers.size(); ++l)
      EXPECT_EQ(back.velocity.sets[n].layers[l].weight, vel.sets[n].layers[l].weight);
  auto other = cfg;
  other.hidden = 7;
  EXPECT_ANY_THROW(load_checkpoint(path, other));
  std::filesystem::remove(path);
}

TEST(Checksum, DistinguishesEveryNetwork) {
  ModelBundle m(tiny_model_config(3, 1), 3);
  for (std::size_t n = 0; n < kNumNets; ++n) {
    const Net net = static_cast<Net>(n);
    const double before = m.checksum(net);
    m.net(net).mutable_layers()[0].bias(0) += 1e-3;
    EXPECT_NE(m.checksum(net), before) << net_name(net);
  }
}
