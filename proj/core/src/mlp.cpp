#include "imitree/mlp.hpp"

#include <cmath>
#include <sstream>

#include "imitree/error.hpp"
#include "imitree/rng.hpp"

namespace imitree::nn {
namespace {

double activate(Activation a, double u) {
  switch (a) {
    case Activation::kIdentity:
      return u;
    case Activation::kRelu:
      return u > 0.0 ? u : 0.0;
    case Activation::kLeakyRelu:
      return u > 0.0 ? u : kLeakySlope * u;
    case Activation::kSigmoid:
      return u >= 0.0 ? 1.0 / (1.0 + std::exp(-u)) : std::exp(u) / (1.0 + std::exp(u));
  }
  return u;
}

double derivative(Activation a, double u) {
  switch (a) {
    case Activation::kIdentity:
      return 1.0;
    case Activation::kRelu:
      return u > 0.0 ? 1.0 : 0.0;
    case Activation::kLeakyRelu:
      return u > 0.0 ? 1.0 : kLeakySlope;
    case Activation::kSigmoid: {
      const double s = activate(a, u);
      return s * (1.0 - s);
    }
  }
  return 1.0;
}

// Piecewise-linear activations have zero curvature almost everywhere.
double second_derivative(Activation a, double u) {
  if (a != Activation::kSigmoid) return 0.0;
  const double s = activate(a, u);
  return s * (1.0 - s) * (1.0 - 2.0 * s);
}

Eigen::MatrixXd apply(Activation a, const Eigen::MatrixXd& u) {
  if (a == Activation::kIdentity) return u;
  return u.unaryExpr([a](double v) { return activate(a, v); });
}

Eigen::MatrixXd apply_derivative(Activation a, const Eigen::MatrixXd& u) {
  return u.unaryExpr([a](double v) { return derivative(a, v); });
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kLeakyRelu:
      return "leaky-relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky-relu") return Activation::kLeakyRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw InvalidArgument("unknown activation '" + name + "'");
}

void MlpSpec::validate() const {
  if (layer_widths.size() < 2) {
    throw InvalidArgument("MlpSpec: need >= 2 layers, got " + std::to_string(layer_widths.size()));
  }
  for (std::size_t i = 0; i < layer_widths.size(); ++i) {
    if (layer_widths[i] < 1) {
      std::ostringstream os;
      os << "MlpSpec: width " << i << " is " << layer_widths[i] << ", must be >= 1";
      throw InvalidArgument(os.str());
    }
  }
  if (hidden_activation == Activation::kSigmoid) {
    throw InvalidArgument("MlpSpec: sigmoid is only supported as the output activation");
  }
}

GradientSet GradientSet::zeros_like(const Mlp& net) {
  GradientSet g;
  g.layers.reserve(net.num_layers());
  for (const auto& l : net.layers()) {
    g.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return g;
}

void GradientSet::set_zero() {
  for (auto& l : layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
}

double GradientSet::squared_norm() const {
  double s = 0.0;
  for (const auto& l : layers) s += l.weight.squaredNorm() + l.bias.squaredNorm();
  return s;
}

bool GradientSet::all_finite() const {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

bool GradientSet::matches(const Mlp& net) const {
  if (layers.size() != net.num_layers()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& p = net.layers()[i];
    if (layers[i].weight.rows() != p.weight.rows() || layers[i].weight.cols() != p.weight.cols() ||
        layers[i].bias.size() != p.bias.size()) {
      return false;
    }
  }
  return true;
}

void GradientSet::scale(double factor) {
  for (auto& l : layers) {
    l.weight *= factor;
    l.bias *= factor;
  }
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (other.layers.size() != layers.size()) throw InvalidArgument("GradientSet: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weight += other.layers[i].weight;
    layers[i].bias += other.layers[i].bias;
  }
  return *this;
}

Mlp::Mlp(MlpSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  RandomStream rng(seed);
  const std::size_t n = spec_.layer_widths.size() - 1;
  layers_.resize(n);
  for (std::size_t l = 0; l < n; ++l) {
    const int fan_in = spec_.layer_widths[l];
    const int fan_out = spec_.layer_widths[l + 1];
    auto& layer = layers_[l];
    layer.weight.resize(fan_out, fan_in);
    layer.bias.resize(fan_out);
    if (l + 1 == n && spec_.zero_init_last_layer) {
      layer.weight.setZero();
      layer.bias.setZero();
      continue;
    }
    const double bound = std::sqrt(1.0 / fan_in);
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) layer.weight(i, j) = rng.uniform(-bound, bound);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.uniform(-bound, bound);
  }
}

std::size_t Mlp::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, MlpTape* tape) const {
  if (layers_.empty()) throw InvalidArgument("Mlp::forward on an uninitialized network");
  if (x.rows() != input_dim()) {
    throw InvalidArgument("Mlp::forward: input has " + std::to_string(x.rows()) + " rows, expected " +
                          std::to_string(input_dim()));
  }
  if (tape) {
    tape->net = this;
    tape->version = version_;
    tape->inputs.resize(layers_.size());
    tape->pre.resize(layers_.size());
  }
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd u = layers_[l].weight * h;
    u.colwise() += layers_[l].bias;
    const Activation act = (l + 1 == layers_.size()) ? spec_.output_activation : spec_.hidden_activation;
    Eigen::MatrixXd out = apply(act, u);
    if (tape) {
      tape->inputs[l] = std::move(h);
      tape->pre[l] = std::move(u);
    }
    h = std::move(out);
  }
  if (tape) tape->output = h;
  return h;
}

void Mlp::check_tape(const MlpTape& tape) const {
  if (tape.empty() || tape.inputs.size() != layers_.size()) throw InvalidArgument("Mlp: missing tape");
  if (tape.net != this) throw InvalidArgument("Mlp: tape was recorded by a different network");
  if (tape.version != version_) throw InvalidArgument("Mlp: stale tape (parameters changed since forward)");
}

Eigen::MatrixXd Mlp::backward(const MlpTape& tape, const Eigen::MatrixXd& dy, GradientSet& grads,
                              bool dy_is_preactivation) const {
  check_tape(tape);
  if (dy.rows() != output_dim() || dy.cols() != tape.output.cols()) {
    throw InvalidArgument("Mlp::backward: dy shape mismatch");
  }
  if (!grads.matches(*this)) throw InvalidArgument("Mlp::backward: gradient set shape mismatch");
  Eigen::MatrixXd g = dy;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    Activation act = (k + 1 == layers_.size()) ? spec_.output_activation : spec_.hidden_activation;
    if (k + 1 == layers_.size() && dy_is_preactivation) act = Activation::kIdentity;
    Eigen::MatrixXd delta = (act == Activation::kIdentity) ? g : g.cwiseProduct(apply_derivative(act, tape.pre[k]));
    grads.layers[k].weight.noalias() += delta * tape.inputs[k].transpose();
    grads.layers[k].bias += delta.rowwise().sum();
    g.noalias() = layers_[k].weight.transpose() * delta;
  }
  return g;
}

Eigen::MatrixXd Mlp::input_gradient(const MlpTape& tape, const Eigen::MatrixXd& dy) const {
  check_tape(tape);
  Eigen::MatrixXd g = dy;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Activation act = (k + 1 == layers_.size()) ? spec_.output_activation : spec_.hidden_activation;
    Eigen::MatrixXd delta = g.cwiseProduct(apply_derivative(act, tape.pre[k]));
    g.noalias() = layers_[k].weight.transpose() * delta;
  }
  return g;
}

Eigen::MatrixXd Mlp::input_gradient_backward(const MlpTape& tape, const Eigen::MatrixXd& dy,
                                             const Eigen::MatrixXd& dgx, GradientSet& grads) const {
  check_tape(tape);
  if (!grads.matches(*this)) throw InvalidArgument("Mlp::input_gradient_backward: gradient set shape mismatch");
  const std::size_t n = layers_.size();
  auto act_of = [&](std::size_t k) {
    return (k + 1 == n) ? spec_.output_activation : spec_.hidden_activation;
  };

  // Replay the input-gradient pass, keeping g_k (cotangent arriving at the
  // output of layer k) and delta_k.
  std::vector<Eigen::MatrixXd> g_out(n), delta(n);
  Eigen::MatrixXd g = dy;
  for (std::size_t k = n; k-- > 0;) {
    g_out[k] = g;
    delta[k] = g.cwiseProduct(apply_derivative(act_of(k), tape.pre[k]));
    g = layers_[k].weight.transpose() * delta[k];
  }

  // Reverse of the input-gradient pass, walking from the input upward.
  std::vector<Eigen::MatrixXd> pre_bar(n);
  Eigen::MatrixXd g_bar = dgx;  // cotangent of the input of layer k
  for (std::size_t k = 0; k < n; ++k) {
    grads.layers[k].weight.noalias() += delta[k] * g_bar.transpose();
    Eigen::MatrixXd delta_bar = layers_[k].weight * g_bar;
    const Activation act = act_of(k);
    pre_bar[k] = delta_bar.cwiseProduct(g_out[k]).cwiseProduct(
        tape.pre[k].unaryExpr([act](double v) { return second_derivative(act, v); }));
    if (k + 1 < n) g_bar = delta_bar.cwiseProduct(apply_derivative(act, tape.pre[k]));
  }

  // Ordinary reverse pass for the dependence of the pre-activations on the
  // parameters and the input.
  Eigen::MatrixXd x_bar;
  for (std::size_t k = n; k-- > 0;) {
    Eigen::MatrixXd u_bar = pre_bar[k];
    if (k + 1 < n) u_bar += x_bar.cwiseProduct(apply_derivative(act_of(k), tape.pre[k]));
    grads.layers[k].weight.noalias() += u_bar * tape.inputs[k].transpose();
    grads.layers[k].bias += u_bar.rowwise().sum();
    x_bar = layers_[k].weight.transpose() * u_bar;
  }
  return x_bar;
}

void Mlp::infer(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != input_dim() || static_cast<int>(y.size()) != output_dim()) {
    throw InvalidArgument("Mlp::infer: dimension mismatch");
  }
  thread_local Eigen::VectorXd a, b;
  a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    b.noalias() = layers_[l].weight * a;
    b += layers_[l].bias;
    const Activation act = (l + 1 == layers_.size()) ? spec_.output_activation : spec_.hidden_activation;
    if (act != Activation::kIdentity) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = activate(act, b(i));
    }
    a.swap(b);
  }
  Eigen::Map<Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(y.size())) = a;
}

Eigen::VectorXd Mlp::infer(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(output_dim());
  infer(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
        std::span<double>(y.data(), static_cast<std::size_t>(y.size())));
  return y;
}

double Mlp::checksum() const {
  double s = 0.0;
  double k = 1.0;
  for (const auto& l : layers_) {
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) s += (k += 1e-3) * l.weight.data()[i];
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) s += (k += 1e-3) * l.bias.data()[i];
  }
  return s;
}

bool Mlp::operator==(const Mlp& other) const {
  if (spec_.layer_widths != other.spec_.layer_widths || layers_.size() != other.layers_.size()) return false;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].weight != other.layers_[i].weight || layers_[i].bias != other.layers_[i].bias) return false;
  }
  return true;
}

}  // namespace imitree::nn
