#include "imitree/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "imitree/ail.hpp"
#include "imitree/envs.hpp"
#include "imitree/error.hpp"

namespace imitree {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto* end = text.data() + text.size();
  auto [p, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || p != end) throw InvalidArgument("config: bad value '" + text + "' for key '" + key + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw InvalidArgument("config: bad boolean '" + text + "' for key '" + key + "'");
}

struct Field {
  const char* key;
  std::function<std::string(const TrainConfig&)> get;
  std::function<void(TrainConfig&, const std::string&)> set;
};

template <typename T>
Field field(const char* key, T TrainConfig::*member) {
  Field f;
  f.key = key;
  f.get = [member](const TrainConfig& c) -> std::string {
    if constexpr (std::is_same_v<T, bool>) {
      return c.*member ? "true" : "false";
    } else if constexpr (std::is_same_v<T, double>) {
      return format_double(c.*member);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return c.*member;
    } else {
      return std::to_string(c.*member);
    }
  };
  f.set = [member, key](TrainConfig& c, const std::string& v) {
    if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(key, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      c.*member = v;
    } else {
      c.*member = parse_number<T>(key, v);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = [] {
    std::vector<Field> f;
    f.push_back(field("env", &TrainConfig::env));
    f.push_back({"seeds",
                 [](const TrainConfig& c) {
                   std::string s;
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) s += (i ? "," : "") + std::to_string(c.seeds[i]);
                   return s;
                 },
                 [](TrainConfig& c, const std::string& v) {
                   c.seeds.clear();
                   std::stringstream ss(v);
                   std::string item;
                   while (std::getline(ss, item, ',')) c.seeds.push_back(parse_number<std::uint64_t>("seeds", trim(item)));
                 }});
    f.push_back(field("gamma", &TrainConfig::gamma));
    f.push_back(field("unroll_steps", &TrainConfig::unroll_steps));
    f.push_back(field("td_steps", &TrainConfig::td_steps));
    f.push_back(field("lambda_policy", &TrainConfig::lambda_policy));
    f.push_back(field("lambda_value", &TrainConfig::lambda_value));
    f.push_back(field("lambda_consistency", &TrainConfig::lambda_consistency));
    f.push_back(field("lambda_disc", &TrainConfig::lambda_disc));
    f.push_back(field("lambda_gp", &TrainConfig::lambda_gp));
    f.push_back(field("lambda_bc", &TrainConfig::lambda_bc));
    f.push_back(field("detach_disc_encoder", &TrainConfig::detach_disc_encoder));
    f.push_back(field("k_samples", &TrainConfig::k_samples));
    f.push_back(field("n_simulations", &TrainConfig::n_simulations));
    f.push_back(field("bc_mix", &TrainConfig::bc_mix));
    f.push_back(field("c1", &TrainConfig::c1));
    f.push_back(field("c2", &TrainConfig::c2));
    f.push_back(field("dirichlet_xi", &TrainConfig::dirichlet_xi));
    f.push_back(field("root_noise_frac", &TrainConfig::root_noise_frac));
    f.push_back(field("collect_temperature", &TrainConfig::collect_temperature));
    f.push_back(field("eval_bc_mix", &TrainConfig::eval_bc_mix));
    f.push_back(field("target_interval", &TrainConfig::target_interval));
    f.push_back(field("reanalyze_ratio", &TrainConfig::reanalyze_ratio));
    f.push_back(field("root_value_bootstrap", &TrainConfig::root_value_bootstrap));
    f.push_back(field("reanalyze_live_model", &TrainConfig::reanalyze_live_model));
    f.push_back(field("learning_rate", &TrainConfig::learning_rate));
    f.push_back(field("momentum", &TrainConfig::momentum));
    f.push_back(field("weight_decay", &TrainConfig::weight_decay));
    f.push_back(field("max_grad_norm", &TrainConfig::max_grad_norm));
    f.push_back(field("batch_size", &TrainConfig::batch_size));
    f.push_back(field("budget_env_steps", &TrainConfig::budget_env_steps));
    f.push_back(field("warmup_env_steps", &TrainConfig::warmup_env_steps));
    f.push_back(field("eval_interval", &TrainConfig::eval_interval));
    f.push_back(field("eval_episodes", &TrainConfig::eval_episodes));
    f.push_back(field("log_interval", &TrainConfig::log_interval));
    f.push_back(field("bc_only", &TrainConfig::bc_only));
    f.push_back(field("latent_dim", &TrainConfig::latent_dim));
    f.push_back(field("hidden", &TrainConfig::hidden));
    f.push_back(field("head_hidden", &TrainConfig::head_hidden));
    f.push_back(field("proj_hidden", &TrainConfig::proj_hidden));
    f.push_back(field("proj_dim", &TrainConfig::proj_dim));
    f.push_back(field("pred_hidden", &TrainConfig::pred_hidden));
    f.push_back(field("value_min", &TrainConfig::value_min));
    f.push_back(field("value_max", &TrainConfig::value_max));
    f.push_back(field("value_bins", &TrainConfig::value_bins));
    return f;
  }();
  return kFields;
}

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw InvalidArgument("config: unknown key '" + key + "'");
}

std::vector<std::string> TrainConfig::keys() {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.emplace_back(f.key);
  return out;
}

std::string TrainConfig::to_text() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + " = " + f.get(*this) + "\n";
  return out;
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    }
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return from_text(ss.str());
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw InvalidArgument("config: " + key + " " + why);
  };
  (void)envs::env_id_from_string(env);
  if (seeds.empty()) fail("seeds", "must list at least one seed");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must be in [0, 1)");
  if (unroll_steps < 0) fail("unroll_steps", "must be >= 0");
  if (td_steps != 1) fail("td_steps", "only 1 is supported");
  for (auto [k, v] : {std::pair{"lambda_policy", lambda_policy}, {"lambda_value", lambda_value},
                      {"lambda_consistency", lambda_consistency}, {"lambda_disc", lambda_disc},
                      {"lambda_gp", lambda_gp}, {"lambda_bc", lambda_bc}}) {
    if (!(v >= 0.0)) fail(k, "must be >= 0");
  }
  if (target_interval < 1) fail("target_interval", "must be >= 1");
  if (reanalyze_ratio != 1.0) fail("reanalyze_ratio", "only 1.0 is supported");
  if (!(collect_temperature >= 0.0)) fail("collect_temperature", "must be >= 0");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (budget_env_steps < 0) fail("budget_env_steps", "must be >= 0");
  if (warmup_env_steps < 0) fail("warmup_env_steps", "must be >= 0");
  if (eval_interval < 1) fail("eval_interval", "must be >= 1");
  if (eval_episodes < 1) fail("eval_episodes", "must be >= 1");
  if (log_interval < 1) fail("log_interval", "must be >= 1");
  search_config().validate();
  sgd_config().validate();
  model_config(1, 1).validate();
  // The largest discounted AIL return must fit on the transformed support.
  const double worst = ail::kMaxReward / (1.0 - gamma);
  if (value_transform(worst) > value_max) {
    fail("value_max", "is too small: transformed worst-case return " + format_double(value_transform(worst)) +
                          " exceeds it");
  }
}

mcts::SearchConfig TrainConfig::search_config() const {
  mcts::SearchConfig s;
  s.k_samples = k_samples;
  s.n_simulations = n_simulations;
  s.c1 = c1;
  s.c2 = c2;
  s.dirichlet_xi = dirichlet_xi;
  s.root_noise_frac = root_noise_frac;
  s.bc_mix = bc_mix;
  s.discount = gamma;
  return s;
}

ReanalyzeConfig TrainConfig::reanalyze_config() const {
  ReanalyzeConfig r;
  r.search = search_config();
  r.root_value_bootstrap = root_value_bootstrap;
  r.search_with_live_model = reanalyze_live_model;
  return r;
}

LossWeights TrainConfig::loss_weights() const {
  LossWeights w;
  w.policy = lambda_policy;
  w.value = lambda_value;
  w.consistency = lambda_consistency;
  w.disc = lambda_disc;
  w.gradient_penalty = lambda_gp;
  w.bc = lambda_bc;
  w.detach_disc_encoder = detach_disc_encoder;
  return w;
}

nn::SgdConfig TrainConfig::sgd_config() const {
  nn::SgdConfig s;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  s.max_grad_norm = max_grad_norm;
  return s;
}

ModelConfig TrainConfig::model_config(int obs_dim, int act_dim) const {
  ModelConfig m;
  m.obs_dim = obs_dim;
  m.act_dim = act_dim;
  m.latent_dim = latent_dim;
  m.hidden = hidden;
  m.head_hidden = head_hidden;
  m.proj_hidden = proj_hidden;
  m.proj_dim = proj_dim;
  m.pred_hidden = pred_hidden;
  m.value_min = value_min;
  m.value_max = value_max;
  m.value_bins = value_bins;
  return m;
}

}  // namespace imitree
