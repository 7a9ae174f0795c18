#include "imitree/codec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "imitree/error.hpp"

namespace imitree {

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

SquashedNormalParams::SquashedNormalParams(Eigen::VectorXd m, const Eigen::VectorXd& raw_log_std)
    : mean(std::move(m)), log_std(raw_log_std.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax)) {
  if (mean.size() != log_std.size()) throw InvalidArgument("SquashedNormalParams: mean/log_std size mismatch");
}

SquashedNormalParams SquashedNormalParams::from_head(const Eigen::VectorXd& head) {
  if (head.size() % 2 != 0) throw InvalidArgument("SquashedNormalParams::from_head: odd head size");
  const Eigen::Index d = head.size() / 2;
  return SquashedNormalParams(head.head(d), head.tail(d));
}

Eigen::VectorXd squash_from_noise(const SquashedNormalParams& p, const Eigen::VectorXd& eps) {
  Eigen::VectorXd a(p.dim());
  // tanh rounds to exactly +/-1 for large arguments; keep samples strictly inside.
  for (int i = 0; i < p.dim(); ++i) {
    a(i) = std::clamp(std::tanh(p.mean(i) + std::exp(p.log_std(i)) * eps(i)), -kActionClip, kActionClip);
  }
  return a;
}

Eigen::VectorXd squashed_sample(const SquashedNormalParams& p, RandomStream& stream) {
  Eigen::VectorXd eps(p.dim());
  for (int i = 0; i < p.dim(); ++i) eps(i) = stream.normal();
  return squash_from_noise(p, eps);
}

LogProbWithGrad squashed_log_prob_grad(const SquashedNormalParams& p, const Eigen::VectorXd& action) {
  if (action.size() != p.dim()) throw InvalidArgument("squashed_log_prob: action dimension mismatch");
  LogProbWithGrad out;
  out.d_mean.resize(p.dim());
  out.d_log_std.resize(p.dim());
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  double lp = 0.0;
  for (int i = 0; i < p.dim(); ++i) {
    const double a = std::clamp(action(i), -kActionClip, kActionClip);
    const double u = std::atanh(a);
    const double inv_std = std::exp(-p.log_std(i));
    const double z = (u - p.mean(i)) * inv_std;
    // log(1 - tanh(u)^2) in its stable form.
    const double log_jac = 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
    lp += -0.5 * z * z - p.log_std(i) - kHalfLog2Pi - log_jac;
    out.d_mean(i) = z * inv_std;
    out.d_log_std(i) = z * z - 1.0;
  }
  if (!std::isfinite(lp)) throw RuntimeError("squashed_log_prob: non-finite result");
  out.log_prob = lp;
  return out;
}

double squashed_log_prob(const SquashedNormalParams& p, const Eigen::VectorXd& action) {
  return squashed_log_prob_grad(p, action).log_prob;
}

ValueSupport::ValueSupport(double v_min, double v_max, int n_bins) : v_min_(v_min), v_max_(v_max), n_bins_(n_bins) {
  if (!(v_min < v_max)) throw InvalidArgument("ValueSupport: v_min must be < v_max");
  if (n_bins < 3 || n_bins % 2 == 0) throw InvalidArgument("ValueSupport: n_bins must be odd and >= 3");
}

Eigen::VectorXd ValueSupport::bin_values() const {
  Eigen::VectorXd v(n_bins_);
  for (int i = 0; i < n_bins_; ++i) v(i) = bin_value(i);
  return v;
}

CategoricalValue categorical_encode(double v, const ValueSupport& support) {
  CategoricalValue c{Eigen::VectorXd::Zero(support.n_bins())};
  const double x = std::clamp(v, support.v_min(), support.v_max());
  const double pos = (x - support.v_min()) / support.width();
  int lo = static_cast<int>(std::floor(pos));
  lo = std::clamp(lo, 0, support.n_bins() - 1);
  if (lo == support.n_bins() - 1) {
    c.probs(lo) = 1.0;
    return c;
  }
  // Weights are taken from the bin values themselves so decode(encode(v))
  // reproduces v to rounding.
  const double left = support.bin_value(lo);
  const double right = support.bin_value(lo + 1);
  const double w_right = (x - left) / (right - left);
  c.probs(lo) = 1.0 - w_right;
  c.probs(lo + 1) = w_right;
  return c;
}

double categorical_decode(const CategoricalValue& c, const ValueSupport& support) {
  if (c.probs.size() != support.n_bins()) throw InvalidArgument("categorical_decode: size mismatch");
  // Summed as offsets from the centre bin in mirrored pairs, so a symmetric
  // distribution decodes to the centre exactly.
  const int mid = support.n_bins() / 2;
  const double centre = 0.5 * (support.v_min() + support.v_max());
  double mass = 0.0;
  double offset = 0.0;
  for (int j = mid; j >= 1; --j) {
    offset += j * (c.probs(mid + j) - c.probs(mid - j));
    mass += c.probs(mid + j) + c.probs(mid - j);
  }
  mass += c.probs(mid);
  return centre * mass + support.width() * offset;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

double value_transform(double x) {
  const double s = x < 0.0 ? -1.0 : 1.0;
  return s * (std::sqrt(std::abs(x) + 1.0) - 1.0) + kValueTransformEps * x;
}

double inverse_value_transform(double y) {
  if (y == 0.0) return 0.0;  // the closed form below leaves a rounding residue at 0
  const double s = y < 0.0 ? -1.0 : 1.0;
  const double e = kValueTransformEps;
  const double r = (std::sqrt(1.0 + 4.0 * e * (std::abs(y) + 1.0 + e)) - 1.0) / (2.0 * e);
  return s * (r * r - 1.0);
}

double decode_value_logits(const Eigen::VectorXd& logits, const ValueSupport& support) {
  return inverse_value_transform(categorical_decode(CategoricalValue{softmax(logits)}, support));
}

CategoricalValue encode_value_target(double value, const ValueSupport& support) {
  return categorical_encode(value_transform(value), support);
}

Eigen::VectorXd dirichlet_sample(double xi, int k, RandomStream& stream) {
  if (!(xi > 0.0)) throw InvalidArgument("dirichlet_sample: concentration must be > 0");
  if (k < 1) throw InvalidArgument("dirichlet_sample: k must be >= 1");
  Eigen::VectorXd g(k);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    g(i) = stream.gamma(xi);
    sum += g(i);
  }
  if (!(sum > 0.0)) {
    // All draws underflowed; fall back to a single random vertex.
    g.setZero();
    g(static_cast<Eigen::Index>(stream.below(static_cast<std::uint64_t>(k)))) = 1.0;
    return g;
  }
  return g / sum;
}

}  // namespace imitree
