#include "imitree/model.hpp"

#include <algorithm>
#include <cmath>

#include "imitree/error.hpp"
#include "imitree/rng.hpp"

namespace imitree {

using nn::Activation;
using nn::Mlp;
using nn::MlpSpec;

std::string_view net_name(Net n) {
  static constexpr std::array<std::string_view, kNumNets> kNames = {
      "representation", "dynamics", "value", "policy", "bc_policy", "discriminator", "projector", "predictor"};
  return kNames[static_cast<std::size_t>(n)];
}

void ModelGrads::set_zero() {
  for (auto& s : sets) s.set_zero();
}

double ModelGrads::norm() const {
  double s = 0.0;
  for (const auto& g : sets) s += g.squared_norm();
  return std::sqrt(s);
}

bool ModelGrads::all_finite() const {
  for (const auto& g : sets)
    if (!g.all_finite()) return false;
  return true;
}

void ModelConfig::validate() const {
  if (obs_dim < 1 || act_dim < 1 || latent_dim < 1 || hidden < 1 || head_hidden < 1 || proj_hidden < 1 ||
      proj_dim < 1 || pred_hidden < 1) {
    throw InvalidArgument("ModelConfig: all dimensions must be >= 1");
  }
  (void)support();
}

ModelBundle::ModelBundle(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg), support_(cfg.support()) {
  cfg_.validate();
  const int d = cfg.latent_dim;
  const int a = cfg.act_dim;
  auto make = [&](Net n, std::vector<int> widths, Activation hidden, Activation out, bool zero_last) {
    MlpSpec spec{std::move(widths), hidden, out, zero_last};
    nets_[static_cast<std::size_t>(n)] = Mlp(spec, derive_seed(seed, {static_cast<std::uint64_t>(n)}));
  };
  const auto lrelu = Activation::kLeakyRelu;
  const auto id = Activation::kIdentity;
  make(Net::kRepresentation, {cfg.obs_dim, cfg.hidden, d}, lrelu, id, false);
  make(Net::kDynamics, {d + a, cfg.hidden, d}, lrelu, id, false);
  make(Net::kValue, {d, cfg.head_hidden, cfg.value_bins}, lrelu, id, true);
  make(Net::kPolicy, {d, cfg.head_hidden, 2 * a}, lrelu, id, true);
  make(Net::kBcPolicy, {d, cfg.head_hidden, 2 * a}, lrelu, id, true);
  make(Net::kDiscriminator, {d + a, cfg.head_hidden, 1}, lrelu, Activation::kSigmoid, true);
  make(Net::kProjector, {d, cfg.proj_hidden, cfg.proj_dim}, Activation::kRelu, id, false);
  make(Net::kPredictor, {cfg.proj_dim, cfg.pred_hidden, cfg.proj_dim}, Activation::kRelu, id, false);
}

ModelGrads ModelBundle::zero_grads() const {
  ModelGrads g;
  for (std::size_t i = 0; i < kNumNets; ++i) g.sets[i] = nn::GradientSet::zeros_like(nets_[i]);
  return g;
}

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd out(a.size() + b.size());
  out << a, b;
  return out;
}

LatentState ModelBundle::represent(const Eigen::VectorXd& obs) const {
  if (obs.size() != cfg_.obs_dim) throw InvalidArgument("represent: observation dimension mismatch");
  return {net(Net::kRepresentation).infer(obs)};
}

LatentState ModelBundle::dynamics(const LatentState& h, const Eigen::VectorXd& action) const {
  if (action.size() != cfg_.act_dim) throw InvalidArgument("dynamics: action dimension mismatch");
  LatentState next{net(Net::kDynamics).infer(concat(h.h, action))};
  if (!next.h.allFinite()) throw RuntimeError("dynamics: non-finite latent state");
  return next;
}

Eigen::VectorXd ModelBundle::value_logits(const LatentState& h) const { return net(Net::kValue).infer(h.h); }

double ModelBundle::predict_value(const LatentState& h) const {
  return decode_value_logits(value_logits(h), support_);
}

SquashedNormalParams ModelBundle::predict_policy(const LatentState& h) const {
  return SquashedNormalParams::from_head(net(Net::kPolicy).infer(h.h));
}

SquashedNormalParams ModelBundle::predict_bc(const LatentState& h) const {
  return SquashedNormalParams::from_head(net(Net::kBcPolicy).infer(h.h));
}

double ModelBundle::discriminate(const LatentState& h, const Eigen::VectorXd& action) const {
  const double p = net(Net::kDiscriminator).infer(concat(h.h, action))(0);
  return std::clamp(p, kDiscClamp, 1.0 - kDiscClamp);
}

double ModelBundle::consistency_loss(const LatentState& h_pred, const Eigen::VectorXd& obs_next) const {
  const Eigen::VectorXd online = net(Net::kPredictor).infer(net(Net::kProjector).infer(h_pred.h));
  const Eigen::VectorXd target = net(Net::kProjector).infer(represent(obs_next).h);
  const double na = online.norm();
  const double nb = target.norm();
  if (na == 0.0 || nb == 0.0) throw RuntimeError("consistency_loss: zero-norm projection");
  return -online.dot(target) / (na * nb);
}

void ModelBundle::export_params(const std::string& prefix, nn::ParamArchive& ar) const {
  for (std::size_t i = 0; i < kNumNets; ++i) {
    nn::export_layers(nets_[i].layers(), prefix + std::string(net_name(static_cast<Net>(i))), ar);
  }
}

void ModelBundle::import_params(const std::string& prefix, const nn::ParamArchive& ar) {
  for (std::size_t i = 0; i < kNumNets; ++i) {
    nn::import_layers(nets_[i].mutable_layers(), prefix + std::string(net_name(static_cast<Net>(i))), ar);
  }
}

bool ModelBundle::operator==(const ModelBundle& other) const {
  for (std::size_t i = 0; i < kNumNets; ++i)
    if (!(nets_[i] == other.nets_[i])) return false;
  return step_counter == other.step_counter;
}

TargetModel snapshot_target(const ModelBundle& m) {
  return TargetModel(std::make_shared<const ModelBundle>(m), m.step_counter);
}

bool should_refresh_target(std::int64_t step, std::int64_t interval) {
  if (interval <= 0) throw InvalidArgument("should_refresh_target: interval must be > 0");
  return step % interval == 0;
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model, const ModelGrads& velocity,
                     const std::string& config_text) {
  nn::ParamArchive ar;
  model.export_params("model.", ar);
  for (std::size_t i = 0; i < kNumNets; ++i) {
    nn::export_layers(velocity.sets[i].layers, "velocity." + std::string(net_name(static_cast<Net>(i))), ar);
  }
  ar.put_scalar("meta.step_counter", static_cast<double>(model.step_counter));
  ar.put_text("meta.config", config_text);
  ar.save(path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg) {
  const auto ar = nn::ParamArchive::load(path);
  LoadedCheckpoint out{ModelBundle(cfg, 0), {}, ar.text("meta.config")};
  out.model.import_params("model.", ar);
  out.velocity = out.model.zero_grads();
  for (std::size_t i = 0; i < kNumNets; ++i) {
    nn::import_layers(out.velocity.sets[i].layers, "velocity." + std::string(net_name(static_cast<Net>(i))), ar);
  }
  out.model.step_counter = static_cast<std::int64_t>(ar.scalar("meta.step_counter"));
  return out;
}

}  // namespace imitree
