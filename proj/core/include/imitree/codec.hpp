#pragma once

#include <Eigen/Dense>

#include "imitree/rng.hpp"

namespace imitree {

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;
/// Actions are clipped to +/- this before atanh.
inline constexpr double kActionClip = 1.0 - 1e-6;

/// Tanh-squashed diagonal Gaussian. log_std is clamped on construction.
struct SquashedNormalParams {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_std;

  SquashedNormalParams() = default;
  SquashedNormalParams(Eigen::VectorXd mean, const Eigen::VectorXd& raw_log_std);
  /// Splits a policy-head output [mean; raw_log_std].
  static SquashedNormalParams from_head(const Eigen::VectorXd& head);

  int dim() const { return static_cast<int>(mean.size()); }
};

/// tanh(mean + std * eps), one eps per coordinate, clipped to +/- kActionClip.
Eigen::VectorXd squash_from_noise(const SquashedNormalParams& p, const Eigen::VectorXd& eps);
Eigen::VectorXd squashed_sample(const SquashedNormalParams& p, RandomStream& stream);

/// log density of `action` under the squashed normal; throws on non-finite.
double squashed_log_prob(const SquashedNormalParams& p, const Eigen::VectorXd& action);

/// log density together with its gradient with respect to mean and
/// (post-clamp) log_std.
struct LogProbWithGrad {
  double log_prob = 0.0;
  Eigen::VectorXd d_mean;
  Eigen::VectorXd d_log_std;
};
LogProbWithGrad squashed_log_prob_grad(const SquashedNormalParams& p, const Eigen::VectorXd& action);

/// Uniform grid of `n_bins` values on [v_min, v_max], both ends included.
class ValueSupport {
 public:
  ValueSupport(double v_min, double v_max, int n_bins);

  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }
  int n_bins() const { return n_bins_; }
  double width() const { return (v_max_ - v_min_) / (n_bins_ - 1); }
  double bin_value(int i) const { return v_min_ + i * width(); }
  Eigen::VectorXd bin_values() const;

 private:
  double v_min_;
  double v_max_;
  int n_bins_;
};

struct CategoricalValue {
  Eigen::VectorXd probs;
};

/// Two-hot encoding; v is clamped into the support.
CategoricalValue categorical_encode(double v, const ValueSupport& support);
/// Expectation over the bin values.
double categorical_decode(const CategoricalValue& c, const ValueSupport& support);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits);

/// Invertible contraction h(x) = sign(x)(sqrt(|x|+1) - 1) + eps*x applied to
/// values before they are placed on the categorical support.
inline constexpr double kValueTransformEps = 1e-3;
double value_transform(double x);
double inverse_value_transform(double y);

/// Logits -> scalar value: softmax, expectation, inverse transform.
double decode_value_logits(const Eigen::VectorXd& logits, const ValueSupport& support);
/// Scalar value -> two-hot target over the transformed support.
CategoricalValue encode_value_target(double value, const ValueSupport& support);

/// Sample from a symmetric Dirichlet(xi, ..., xi) of dimension k.
Eigen::VectorXd dirichlet_sample(double xi, int k, RandomStream& stream);

double softplus(double x);

}  // namespace imitree
