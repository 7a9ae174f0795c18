#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace imitree::nn {

enum class Activation { kIdentity, kRelu, kLeakyRelu, kSigmoid };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct MlpSpec {
  std::vector<int> layer_widths;
  Activation hidden_activation = Activation::kLeakyRelu;
  Activation output_activation = Activation::kIdentity;
  bool zero_init_last_layer = false;

  /// Throws InvalidArgument naming the offending width.
  void validate() const;
};

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

class Mlp;

/// Per-parameter arrays shape-matched to an Mlp. Also used for optimizer
/// velocity.
struct GradientSet {
  std::vector<Layer> layers;

  static GradientSet zeros_like(const Mlp& net);
  void set_zero();
  double squared_norm() const;
  bool all_finite() const;
  bool matches(const Mlp& net) const;
  void scale(double factor);
  GradientSet& operator+=(const GradientSet& other);
};

/// Activation record of one batched forward pass. Columns are samples.
struct MlpTape {
  const Mlp* net = nullptr;
  std::uint64_t version = 0;
  std::vector<Eigen::MatrixXd> inputs;  // input of layer l
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of layer l
  Eigen::MatrixXd output;

  bool empty() const { return net == nullptr; }
};

class Mlp {
 public:
  Mlp() = default;
  /// Non-final layers ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)); the final layer is
  /// exactly zero when `spec.zero_init_last_layer` is set.
  Mlp(MlpSpec spec, std::uint64_t seed);

  const MlpSpec& spec() const { return spec_; }
  int input_dim() const { return spec_.layer_widths.front(); }
  int output_dim() const { return spec_.layer_widths.back(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::size_t num_parameters() const;

  const std::vector<Layer>& layers() const { return layers_; }
  /// Mutable access bumps the version so outstanding tapes become stale.
  std::vector<Layer>& mutable_layers() {
    ++version_;
    return layers_;
  }
  std::uint64_t version() const { return version_; }

  /// x is (input_dim x batch). When `tape` is non-null it is overwritten with
  /// everything `backward` needs.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, MlpTape* tape = nullptr) const;

  /// Accumulates parameter gradients of <dy, y> into `grads` and returns the
  /// gradient with respect to the input. With `dy_is_preactivation`, dy is
  /// taken with respect to the final pre-activation (logits) instead.
  Eigen::MatrixXd backward(const MlpTape& tape, const Eigen::MatrixXd& dy, GradientSet& grads,
                           bool dy_is_preactivation = false) const;

  /// Gradient of <dy, y> with respect to the input, per column.
  Eigen::MatrixXd input_gradient(const MlpTape& tape, const Eigen::MatrixXd& dy) const;

  /// Second-order pass: given the cotangent `dgx` of the input gradient
  /// computed by `input_gradient(tape, dy)`, accumulates the parameter
  /// gradients into `grads` and returns the cotangent with respect to the input.
  Eigen::MatrixXd input_gradient_backward(const MlpTape& tape, const Eigen::MatrixXd& dy,
                                          const Eigen::MatrixXd& dgx, GradientSet& grads) const;

  /// Single-sample inference without a tape.
  void infer(std::span<const double> x, std::span<double> y) const;
  Eigen::VectorXd infer(const Eigen::VectorXd& x) const;

  /// Order-sensitive digest of all parameters; used to detect change.
  double checksum() const;

  bool operator==(const Mlp& other) const;

 private:
  void check_tape(const MlpTape& tape) const;

  MlpSpec spec_;
  std::vector<Layer> layers_;
  std::uint64_t version_ = 0;
};

}  // namespace imitree::nn
