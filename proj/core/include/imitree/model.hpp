#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "imitree/codec.hpp"
#include "imitree/mlp.hpp"
#include "imitree/param_io.hpp"

namespace imitree {

/// Abstract state produced by the representation and dynamics networks.
struct LatentState {
  Eigen::VectorXd h;
};

struct ModelConfig {
  int obs_dim = 3;
  int act_dim = 1;
  int latent_dim = 32;
  int hidden = 64;       // representation and dynamics
  int head_hidden = 64;  // value, policy, BC policy, discriminator
  int proj_hidden = 128;
  int proj_dim = 128;
  int pred_hidden = 128;
  double value_min = -40.0;
  double value_max = 40.0;
  int value_bins = 161;

  ValueSupport support() const { return ValueSupport(value_min, value_max, value_bins); }
  void validate() const;
};

enum class Net : std::size_t {
  kRepresentation,
  kDynamics,
  kValue,
  kPolicy,
  kBcPolicy,
  kDiscriminator,
  kProjector,
  kPredictor,
};
inline constexpr std::size_t kNumNets = 8;
std::string_view net_name(Net n);

/// One gradient set per network.
struct ModelGrads {
  std::array<nn::GradientSet, kNumNets> sets;

  nn::GradientSet& operator[](Net n) { return sets[static_cast<std::size_t>(n)]; }
  const nn::GradientSet& operator[](Net n) const { return sets[static_cast<std::size_t>(n)]; }
  void set_zero();
  double norm() const;
  bool all_finite() const;
};

/// Representation f, dynamics g, value V, policy pi, BC policy pi_BC,
/// discriminator D, and the projector/predictor pair used for temporal
/// consistency. The policy, BC, value and discriminator heads start at zero.
class ModelBundle {
 public:
  ModelBundle() = default;
  ModelBundle(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const ValueSupport& support() const { return support_; }

  nn::Mlp& net(Net n) { return nets_[static_cast<std::size_t>(n)]; }
  const nn::Mlp& net(Net n) const { return nets_[static_cast<std::size_t>(n)]; }

  ModelGrads zero_grads() const;

  LatentState represent(const Eigen::VectorXd& obs) const;
  /// Throws RuntimeError on a non-finite result.
  LatentState dynamics(const LatentState& h, const Eigen::VectorXd& action) const;
  Eigen::VectorXd value_logits(const LatentState& h) const;
  double predict_value(const LatentState& h) const;
  SquashedNormalParams predict_policy(const LatentState& h) const;
  SquashedNormalParams predict_bc(const LatentState& h) const;
  /// sigmoid output clamped to [1e-6, 1 - 1e-6].
  double discriminate(const LatentState& h, const Eigen::VectorXd& action) const;

  /// -cos(predictor(projector(h_pred)), projector(represent(obs_next))).
  double consistency_loss(const LatentState& h_pred, const Eigen::VectorXd& obs_next) const;

  double checksum(Net n) const { return net(n).checksum(); }

  std::int64_t step_counter = 0;

  void export_params(const std::string& prefix, nn::ParamArchive& ar) const;
  void import_params(const std::string& prefix, const nn::ParamArchive& ar);

  bool operator==(const ModelBundle& other) const;

 private:
  ModelConfig cfg_;
  ValueSupport support_{-1.0, 1.0, 3};
  std::array<nn::Mlp, kNumNets> nets_;
};

inline constexpr double kDiscClamp = 1e-6;

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Immutable parameter snapshot.
class TargetModel {
 public:
  TargetModel() = default;
  TargetModel(std::shared_ptr<const ModelBundle> bundle, std::int64_t step)
      : bundle_(std::move(bundle)), snapshot_step_(step) {}

  const ModelBundle& model() const { return *bundle_; }
  std::int64_t snapshot_step() const { return snapshot_step_; }
  bool valid() const { return bundle_ != nullptr; }

 private:
  std::shared_ptr<const ModelBundle> bundle_;
  std::int64_t snapshot_step_ = -1;
};

TargetModel snapshot_target(const ModelBundle& m);
bool should_refresh_target(std::int64_t step, std::int64_t interval = 200);

/// Full training state on disk: model, optimizer velocity, step counter and
/// the config text that built them.
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model, const ModelGrads& velocity,
                     const std::string& config_text);
struct LoadedCheckpoint {
  ModelBundle model;
  ModelGrads velocity;
  std::string config_text;
};
/// `cfg` must describe the same shapes the checkpoint was written with.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg);

}  // namespace imitree
