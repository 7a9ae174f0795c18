#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "imitree/codec.hpp"
#include "imitree/error.hpp"
#include "imitree/rng.hpp"

using namespace imitree;

namespace {

SquashedNormalParams params1(double mean, double log_std) {
  return SquashedNormalParams(Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, log_std));
}

double value_ce(const CategoricalValue& target, const Eigen::VectorXd& pred) {
  double ce = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i)
    if (target.probs(i) > 0.0) ce -= target.probs(i) * std::log(pred(i));
  return ce;
}

}  // namespace

TEST(SquashedNormal, LogStdClampedOnConstruction) {
  const auto lo = params1(0.0, -std::numeric_limits<double>::infinity());
  const auto hi = params1(0.0, 50.0);
  EXPECT_EQ(lo.log_std(0), kLogStdMin);
  EXPECT_EQ(hi.log_std(0), kLogStdMax);
  EXPECT_EQ(params1(0.0, -1.5).log_std(0), -1.5);
}

TEST(SquashedNormal, FromHeadSplitsMeanAndLogStd) {
  Eigen::VectorXd head(4);
  head << 0.1, -0.2, -9.0, 0.5;
  const auto p = SquashedNormalParams::from_head(head);
  EXPECT_EQ(p.dim(), 2);
  EXPECT_EQ(p.mean(1), -0.2);
  EXPECT_EQ(p.log_std(0), kLogStdMin);
  EXPECT_EQ(p.log_std(1), 0.5);
  EXPECT_THROW(SquashedNormalParams::from_head(Eigen::VectorXd::Zero(3)), InvalidArgument);
}

TEST(SquashedNormal, ZeroNoiseGivesTanhOfMean) {
  EXPECT_EQ(squash_from_noise(params1(0.0, 0.0), Eigen::VectorXd::Zero(1))(0), 0.0);
  EXPECT_DOUBLE_EQ(squash_from_noise(params1(0.7, -1.0), Eigen::VectorXd::Zero(1))(0), std::tanh(0.7));
}

TEST(SquashedNormal, MinimumSpreadConcentratesNearZero) {
  RandomStream s(17);
  const auto p = params1(0.0, -std::numeric_limits<double>::infinity());
  int inside = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) inside += std::abs(squashed_sample(p, s)(0)) < 0.1;
  EXPECT_GE(inside, static_cast<int>(0.999 * n));
}

TEST(SquashedNormal, SamplesStrictlyInsideAndReproducible) {
  Eigen::VectorXd mean(3), ls(3);
  mean << 3.0, -3.0, 0.0;
  ls << 2.0, 2.0, 2.0;
  const SquashedNormalParams p(mean, ls);
  RandomStream a(5), b(5);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::VectorXd x = squashed_sample(p, a);
    EXPECT_TRUE((x.array().abs() < 1.0).all());
    EXPECT_EQ(x, squashed_sample(p, b));
  }
}

TEST(SquashedNormal, StandardAtZero) {
  EXPECT_NEAR(squashed_log_prob(params1(0.0, 0.0), Eigen::VectorXd::Zero(1)), -0.5 * std::log(2 * std::numbers::pi),
              1e-15);
  EXPECT_NEAR(squashed_log_prob(params1(0.0, 0.0), Eigen::VectorXd::Zero(1)), -0.9189385332046727, 1e-12);
}

TEST(SquashedNormal, TranslationByChangeOfVariables) {
  for (double m : {-2.0, -0.3, 0.4, 1.7}) {
    for (double ls : {-2.0, 0.0, 1.0}) {
      // Jacobian differs at tanh(m), so compare Gaussian parts only.
      const double a = std::tanh(m);
      const double jac = std::log(1.0 - a * a);
      EXPECT_NEAR(squashed_log_prob(params1(m, ls), Eigen::VectorXd::Constant(1, a)) + jac,
                  squashed_log_prob(params1(0.0, ls), Eigen::VectorXd::Zero(1)), 1e-9);
    }
  }
}

TEST(SquashedNormal, MatchesDirectFormula) {
  RandomStream s(8);
  for (int i = 0; i < 200; ++i) {
    const double m = s.uniform(-2, 2), ls = s.uniform(-3, 1.5), a = s.uniform(-0.999, 0.999);
    const double sd = std::exp(ls);
    const double u = std::atanh(a);
    const double direct = -0.5 * std::pow((u - m) / sd, 2) - ls - 0.5 * std::log(2 * std::numbers::pi) -
                          std::log(1.0 - a * a);
    EXPECT_NEAR(squashed_log_prob(params1(m, ls), Eigen::VectorXd::Constant(1, a)), direct, 1e-9);
  }
}

TEST(SquashedNormal, BoundaryActionsAreFinite) {
  for (double a : {-1.0, 1.0, 1.0 - 1e-9, -1.0 + 1e-7}) {
    for (double ls : {kLogStdMin, 0.0, kLogStdMax}) {
      for (double m : {-5.0, 0.0, 5.0}) {
        EXPECT_TRUE(std::isfinite(squashed_log_prob(params1(m, ls), Eigen::VectorXd::Constant(1, a))));
      }
    }
  }
}

TEST(SquashedNormal, DimensionMismatchThrows) {
  EXPECT_THROW(squashed_log_prob(params1(0.0, 0.0), Eigen::VectorXd::Zero(2)), InvalidArgument);
  EXPECT_THROW(SquashedNormalParams(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)), InvalidArgument);
}

// Quadrature oracle: the density integrates to one over (-1, 1).
TEST(SquashedNormal, DensityIntegratesToOne) {
  RandomStream s(99);
  const int n = 10000;
  for (int draw = 0; draw < 20; ++draw) {
    const auto p = params1(s.uniform(-1.0, 1.0), s.uniform(-1.0, 0.0));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = -1.0 + (i + 0.5) * (2.0 / n);
      sum += std::exp(squashed_log_prob(p, Eigen::VectorXd::Constant(1, a))) * (2.0 / n);
    }
    EXPECT_NEAR(sum, 1.0, 1e-3) << "draw " << draw;
  }
}

TEST(SquashedNormal, LogProbGradientFiniteDifference) {
  RandomStream s(12);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd mean(2), ls(2), a(2);
    for (int i = 0; i < 2; ++i) {
      mean(i) = s.uniform(-1.5, 1.5);
      ls(i) = s.uniform(-2.0, 1.0);
      a(i) = s.uniform(-0.95, 0.95);
    }
    const auto g = squashed_log_prob_grad(SquashedNormalParams(mean, ls), a);
    EXPECT_NEAR(g.log_prob, squashed_log_prob(SquashedNormalParams(mean, ls), a), 1e-12);
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd mp = mean, mm = mean, lp = ls, lm = ls;
      mp(i) += h;
      mm(i) -= h;
      lp(i) += h;
      lm(i) -= h;
      const double fd_mean =
          (squashed_log_prob(SquashedNormalParams(mp, ls), a) - squashed_log_prob(SquashedNormalParams(mm, ls), a)) /
          (2 * h);
      const double fd_ls =
          (squashed_log_prob(SquashedNormalParams(mean, lp), a) - squashed_log_prob(SquashedNormalParams(mean, lm), a)) /
          (2 * h);
      EXPECT_NEAR(g.d_mean(i), fd_mean, 1e-6 * std::max(1.0, std::abs(fd_mean)));
      EXPECT_NEAR(g.d_log_std(i), fd_ls, 1e-6 * std::max(1.0, std::abs(fd_ls)));
    }
  }
}

TEST(ValueSupportTest, Validation) {
  EXPECT_THROW(ValueSupport(1.0, 1.0, 11), InvalidArgument);
  EXPECT_THROW(ValueSupport(-1.0, 1.0, 10), InvalidArgument);
  EXPECT_THROW(ValueSupport(-1.0, 1.0, 1), InvalidArgument);
  const ValueSupport s(-100, 100, 401);
  EXPECT_EQ(s.bin_value(0), -100.0);
  EXPECT_EQ(s.bin_value(400), 100.0);
  EXPECT_EQ(s.width(), 0.5);
}

TEST(Categorical, OnGridCenter) {
  const ValueSupport s(-100, 100, 401);
  const auto c = categorical_encode(0.0, s);
  EXPECT_EQ(c.probs(200), 1.0);
  EXPECT_EQ(c.probs.sum(), 1.0);
}

TEST(Categorical, LinearSplitBetweenNeighbours) {
  const ValueSupport s(-100, 100, 401);
  const auto c = categorical_encode(0.25, s);
  EXPECT_DOUBLE_EQ(c.probs(200), 0.5);
  EXPECT_DOUBLE_EQ(c.probs(201), 0.5);
  EXPECT_DOUBLE_EQ(c.probs.sum(), 1.0);
}

TEST(Categorical, ClampsOutOfRange) {
  const ValueSupport s(-100, 100, 401);
  EXPECT_EQ(categorical_encode(250.0, s).probs(400), 1.0);
  EXPECT_EQ(categorical_encode(-1e9, s).probs(0), 1.0);
}

TEST(Categorical, UniformDecodesToZero) {
  const ValueSupport s(-100, 100, 401);
  EXPECT_NEAR(categorical_decode({Eigen::VectorXd::Constant(401, 1.0 / 401)}, s), 0.0, 1e-12);
}

TEST(Categorical, EncodeDecodeIdentityOnGrid) {
  for (const auto& s : {ValueSupport(-100, 100, 401), ValueSupport(-25, 25, 101), ValueSupport(-40, 40, 161)}) {
    for (int i = 0; i < 1000; ++i) {
      const double v = s.v_min() + (s.v_max() - s.v_min()) * i / 999.0;
      const auto c = categorical_encode(v, s);
      EXPECT_NEAR(categorical_decode(c, s), v, 1e-12);
      EXPECT_TRUE((c.probs.array() >= 0.0).all());
      EXPECT_NEAR(c.probs.sum(), 1.0, 1e-9);
      EXPECT_LE((c.probs.array() > 0.0).count(), 2);
    }
  }
}

TEST(Categorical, DecodeMatchesDotProduct) {
  const ValueSupport s(-25, 25, 101);
  RandomStream r(4);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd p(101);
    for (int i = 0; i < 101; ++i) p(i) = r.uniform();
    p /= p.sum();
    double dot = 0.0;
    for (int i = 0; i < 101; ++i) dot += p(i) * (-25.0 + 0.5 * i);
    EXPECT_NEAR(categorical_decode({p}, s), dot, 1e-12);
  }
}

// Property: cross-entropy against encode(v) is minimal at the prediction
// encode(v) itself; any feasible local perturbation on the simplex raises it.
TEST(Categorical, CrossEntropyMinimizedAtEncoding) {
  const ValueSupport s(-5, 5, 21);
  RandomStream r(31);
  for (int t = 0; t < 50; ++t) {
    const auto target = categorical_encode(r.uniform(-5.5, 5.5), s);
    const double base = value_ce(target, target.probs);
    const Eigen::Index support = (target.probs.array() > 0.0).count();
    for (int k = 0; k < 20; ++k) {
      // Feasible direction: mass may only flow into empty bins, and the
      // total stays one.
      Eigen::VectorXd d(21);
      double occupied_sum = 0.0;
      for (int i = 0; i < 21; ++i) {
        d(i) = r.uniform(-1, 1);
        if (target.probs(i) == 0.0) d(i) = std::abs(d(i));
        else occupied_sum += d(i);
      }
      const double shift = (d.sum()) / static_cast<double>(support);
      for (int i = 0; i < 21; ++i)
        if (target.probs(i) > 0.0) d(i) -= shift;
      const double step = 1e-6;
      const Eigen::VectorXd moved = target.probs + step * d;
      if ((moved.array() < 0.0).any()) continue;
      EXPECT_GT(value_ce(target, moved) - base, 0.0);
    }
  }
}

TEST(ValueTransform, InverseRoundTrip) {
  for (double x : {-1000.0, -13.8, -1.0, -1e-3, 0.0, 1e-4, 0.6931, 5.0, 250.0, 1381.5}) {
    EXPECT_NEAR(inverse_value_transform(value_transform(x)), x, 1e-9 * std::max(1.0, std::abs(x)));
  }
  EXPECT_EQ(value_transform(0.0), 0.0);
  EXPECT_NEAR(value_transform(3.0), 1.0 + 3e-3, 1e-15);
}

TEST(ValueTransform, MonotoneIncreasing) {
  double prev = value_transform(-500.0);
  for (double x = -499.0; x <= 500.0; x += 1.0) {
    const double y = value_transform(x);
    EXPECT_GT(y, prev);
    prev = y;
  }
}

TEST(ValueTarget, EncodeThenDecodeLogitsRecoversValue) {
  const ValueSupport s(-40, 40, 161);
  for (double v : {0.0, 0.6931, 13.8, 69.3, 500.0}) {
    const auto c = encode_value_target(v, s);
    const Eigen::VectorXd logits = c.probs.array().max(1e-300).log();
    EXPECT_NEAR(decode_value_logits(logits, s), v, 1e-9 * std::max(1.0, v));
  }
  EXPECT_EQ(decode_value_logits(Eigen::VectorXd::Zero(161), s), 0.0);
}

TEST(Softmax, StableAndNormalized) {
  Eigen::VectorXd z(3);
  z << 1000.0, 1000.0, -1000.0;
  const Eigen::VectorXd p = softmax(z);
  EXPECT_NEAR(p(0), 0.5, 1e-15);
  EXPECT_NEAR(p.sum(), 1.0, 1e-15);
  EXPECT_NEAR(log_softmax(z)(0), -std::log(2.0), 1e-12);
  EXPECT_NEAR(softplus(0.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(softplus(800.0), 800.0, 1e-12);
  EXPECT_GT(softplus(-800.0), -1e-300);
}

TEST(Dirichlet, SingleCategory) {
  RandomStream s(1);
  EXPECT_EQ(dirichlet_sample(0.3, 1, s)(0), 1.0);
}

TEST(Dirichlet, Validation) {
  RandomStream s(1);
  EXPECT_THROW(dirichlet_sample(0.0, 4, s), InvalidArgument);
  EXPECT_THROW(dirichlet_sample(0.3, 0, s), InvalidArgument);
}

TEST(Dirichlet, SimplexProperty) {
  RandomStream s(2);
  for (double xi : {0.05, 0.3, 1.0, 5.0}) {
    for (int k : {1, 2, 4, 16, 24}) {
      for (int t = 0; t < 200; ++t) {
        const Eigen::VectorXd d = dirichlet_sample(xi, k, s);
        EXPECT_TRUE((d.array() >= 0.0).all());
        EXPECT_NEAR(d.sum(), 1.0, 1e-12);
      }
    }
  }
}

TEST(Dirichlet, MonteCarloMean) {
  RandomStream s(3);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(16);
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += dirichlet_sample(0.3, 16, s);
  acc /= n;
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(acc(i), 1.0 / 16, 0.01);
}
