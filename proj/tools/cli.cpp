#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "imitree/config.hpp"
#include "imitree/demo_io.hpp"
#include "imitree/error.hpp"
#include "imitree/metrics.hpp"
#include "imitree/planning_stub.hpp"
#include "imitree/trainer.hpp"

namespace imitree::cli {
namespace {

namespace fs = std::filesystem;

int verbosity() {
  const char* v = std::getenv("IMITREE_VERBOSE");
  return v ? std::atoi(v) : 0;
}

fs::path output_dir(const std::string& flag) {
  const char* v = std::getenv("IMITREE_OUT_DIR");
  return (v && *v) ? fs::path(v) : fs::path(flag);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  TrainConfig c;
  c.set("seeds", text);
  return c.seeds;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) throw InvalidArgument(std::string("bad ") + what + " list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument(std::string("empty ") + what + " list");
  return out;
}

TrainConfig build_config(const std::string& config_path, const std::vector<std::string>& sets) {
  TrainConfig cfg = config_path.empty() ? TrainConfig{} : TrainConfig::load(config_path);
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

struct LoadedDemos {
  DemoFile file;
  DemoReferences refs;
};

LoadedDemos load_demo_bundle(const fs::path& path) {
  LoadedDemos d{load_demos(path), {}};
  d.refs = load_references(references_path(path));
  if (d.refs.env != d.file.env) throw RuntimeError("reference file names a different environment");
  return d;
}

std::vector<Trajectory> expert_trajectories(const DemoFile& f) {
  std::vector<Trajectory> out;
  for (const auto& t : f.trajectories)
    if (t.source() == Origin::kExpert) out.push_back(t);
  if (out.empty()) throw RuntimeError("demo file holds no expert trajectories");
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  os << text;
}

int cmd_gen_expert(const std::string& env, int n, std::uint64_t seed, int random_episodes, const std::string& out_path,
                   std::ostream& out) {
  const auto spec = envs::EnvSpec::make(env);
  const auto demos = generate_demos(spec, n, seed, random_episodes);
  const fs::path path(out_path);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_demos(path, demos.file);
  save_references(references_path(path), demos.refs);
  out << "wrote " << n << " demos for " << demos.refs.env << " to " << path.string() << "\n"
      << "J_expert " << demos.refs.j_expert << "  J_random " << demos.refs.j_random << "\n";
  return 0;
}

nlohmann::ordered_json seed_list(const std::vector<std::uint64_t>& seeds) { return nlohmann::ordered_json(seeds); }

int cmd_train(TrainConfig cfg, const std::string& demos_path, const std::string& out_flag, std::ostream& out,
              std::ostream& err) {
  const auto demos = load_demo_bundle(demos_path);
  if (cfg.env != demos.file.env) {
    if (verbosity() > 0) err << "note: using environment '" << demos.file.env << "' from the demo file\n";
    cfg.env = demos.file.env;
  }
  cfg.validate();
  const ExpertDataset dataset(expert_trajectories(demos.file));
  const fs::path dir = output_dir(out_flag);
  fs::create_directories(dir);
  write_text(dir / "config.txt", cfg.to_text());

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  double score_sum = 0.0;
  int scored = 0;
  for (auto seed : cfg.seeds) {
    const fs::path run_dir = dir / ("seed-" + std::to_string(seed));
    Trainer trainer(cfg, dataset, demos.refs, seed, run_dir);
    std::size_t seen = 0;
    if (verbosity() > 0) {
      trainer.after_train_step = [&](const Trainer& t) {
        const auto& recs = t.metrics().records();
        for (; seen < recs.size(); ++seen) {
          const auto& r = recs[seen];
          err << "seed " << seed << " env_steps " << r.env_steps << " train_steps " << r.train_steps << " loss "
              << r.loss.total;
          if (r.eval_score) err << " eval " << *r.eval_return << " score " << *r.eval_score;
          err << "\n";
        }
      };
    }
    const auto start = std::chrono::steady_clock::now();
    trainer.run();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_run_outputs(run_dir, trainer.metrics(), trainer.summary(), wall);
    const auto s = trainer.summary();
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["final_score"] = s.final_score ? nlohmann::ordered_json(*s.final_score) : nullptr;
    j["final_return"] = s.final_return ? nlohmann::ordered_json(*s.final_return) : nullptr;
    j["steps_to_half"] = s.steps_to_half ? nlohmann::ordered_json(*s.steps_to_half) : nullptr;
    runs.push_back(j);
    out << "seed " << seed << ": env_steps " << s.env_steps << " train_steps " << s.train_steps;
    if (s.final_score) {
      out << " final score " << *s.final_score << " (return " << *s.final_return << ")";
      score_sum += *s.final_score;
      ++scored;
    }
    out << "\n";
  }
  nlohmann::ordered_json summary;
  summary["env"] = cfg.env;
  summary["seeds"] = seed_list(cfg.seeds);
  summary["runs"] = runs;
  summary["mean_final_score"] = scored ? nlohmann::ordered_json(score_sum / scored) : nullptr;
  summary["git_describe"] = git_describe();
  summary["config"] = cfg.to_text();
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  if (scored) out << "mean final score " << score_sum / scored << "\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& demos_path, int episodes, std::uint64_t seed,
             const std::string& policy, const std::string& trace_path, std::ostream& out) {
  const auto demos = load_demo_bundle(demos_path);
  const auto ar_cfg = TrainConfig::from_text(nn::ParamArchive::load(checkpoint).text("meta.config"));
  if (ar_cfg.env != demos.file.env) throw RuntimeError("checkpoint and demo file use different environments");
  const auto spec = envs::EnvSpec::make(ar_cfg.env);
  const auto ck = load_checkpoint(checkpoint, ar_cfg.model_config(spec.obs_dim, spec.act_dim));
  const int n = episodes > 0 ? episodes : ar_cfg.eval_episodes;
  std::string mode = policy;
  if (mode.empty()) mode = ar_cfg.bc_only ? "bc" : "search";

  std::ofstream trace;
  if (!trace_path.empty()) {
    trace.open(trace_path);
    if (!trace) throw RuntimeError("cannot open trace file '" + trace_path + "'");
  }
  Actor actor;
  if (mode == "search") {
    auto search = ar_cfg.search_config();
    if (!ar_cfg.eval_bc_mix) search.bc_mix = 0.0;
    actor = [&ck, &trace, search](const envs::EnvState&, const Eigen::VectorXd& obs, RandomStream& stream) {
      const mcts::BundleSearchModel sm(ck.model);
      mcts::SearchOptions opt;
      opt.root_noise = false;
      opt.trace = trace.is_open() ? &trace : nullptr;
      return mcts::act(mcts::run_search(obs, sm, search, stream, opt), 0.0, stream);
    };
  } else if (mode == "bc") {
    actor = bc_actor(ck.model);
  } else if (mode == "policy") {
    actor = policy_actor(ck.model);
  } else if (mode == "expert") {
    actor = expert_actor(spec);
  } else if (mode == "random") {
    actor = random_actor(spec);
  } else {
    throw InvalidArgument("unknown policy '" + mode + "'");
  }
  const auto r = evaluate(spec, actor, n, seed, demos.refs);
  nlohmann::ordered_json j;
  j["env"] = ar_cfg.env;
  j["policy"] = mode;
  j["episodes"] = n;
  j["seed"] = seed;
  j["step_counter"] = ck.model.step_counter;
  j["mean_return"] = r.mean_return;
  j["normalized_score"] = r.normalized;
  j["returns"] = r.returns;
  j["git_describe"] = git_describe();
  out << j.dump(2) << "\n";
  return 0;
}

struct Grid {
  std::vector<double> alphas{0.0, 0.25};
  std::vector<int> ks{4, 8, 16, 24};
  std::vector<int> ns{5, 10, 25, 50};
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string rel_change(double v, double base) {
  if (base == 0.0) return "n/a";
  std::ostringstream os;
  os << std::showpos << std::fixed << std::setprecision(1) << 100.0 * (v - base) / std::abs(base) << "%";
  return os.str();
}

int cmd_ablate_planning(const TrainConfig& cfg, const Grid& grid, int n_seeds, const std::string& out_flag,
                        std::ostream& out) {
  const mcts::PlanningStub stub;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
  std::iota(seeds.begin(), seeds.end(), 0);
  struct Row {
    double alpha;
    int k, n;
    mcts::PlanningPoint p;
  };
  std::vector<Row> rows;
  for (double a : grid.alphas)
    for (int k : grid.ks)
      for (int n : grid.ns) {
        auto sc = cfg.search_config();
        sc.bc_mix = a;
        sc.k_samples = k;
        sc.n_simulations = n;
        rows.push_back({a, k, n, mcts::planning_oracle(stub, sc, seeds)});
      }
  const auto base_cfg = cfg.search_config();
  const auto base = mcts::planning_oracle(stub, base_cfg, seeds);
  std::string csv = "alpha,k_samples,n_simulations,mean_error,mean_root_value,relative_change\n";
  out << "planning oracle (" << n_seeds << " seeds); performance = mean root value; baseline alpha="
      << base_cfg.bc_mix << " K=" << base_cfg.k_samples << " N=" << base_cfg.n_simulations << "\n";
  out << std::left << std::setw(7) << "alpha" << std::setw(5) << "K" << std::setw(5) << "N" << std::setw(12)
      << "error" << std::setw(12) << "root_value" << "rel_change\n";
  for (const auto& r : rows) {
    const std::string rc = rel_change(r.p.mean_root_value, base.mean_root_value);
    out << std::left << std::setw(7) << fmt(r.alpha, 2) << std::setw(5) << r.k << std::setw(5) << r.n << std::setw(12)
        << fmt(r.p.mean_error) << std::setw(12) << fmt(r.p.mean_root_value) << rc << "\n";
    csv += fmt(r.alpha, 2) + "," + std::to_string(r.k) + "," + std::to_string(r.n) + "," + fmt(r.p.mean_error, 8) +
           "," + fmt(r.p.mean_root_value, 8) + "," + rc + "\n";
  }
  if (!out_flag.empty()) {
    const fs::path dir = output_dir(out_flag);
    write_text(dir / "ablate.csv", csv);
    nlohmann::ordered_json j;
    j["mode"] = "planning";
    j["seeds"] = seed_list(seeds);
    j["git_describe"] = git_describe();
    j["config"] = cfg.to_text();
    write_text(dir / "ablate.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_ablate_train(TrainConfig cfg, const Grid& grid, const std::string& demos_path, const std::string& out_flag,
                     std::ostream& out) {
  const auto demos = load_demo_bundle(demos_path);
  cfg.env = demos.file.env;
  cfg.validate();
  const ExpertDataset dataset(expert_trajectories(demos.file));
  const fs::path dir = output_dir(out_flag.empty() ? "ablate-out" : out_flag);

  auto mean_score = [&](const TrainConfig& c, const std::string& tag) {
    double sum = 0.0;
    for (auto seed : c.seeds) {
      const auto m = train(c, dataset, demos.refs, seed, dir / tag / ("seed-" + std::to_string(seed)));
      const auto last = m.last_eval();
      sum += last ? *last->eval_score : 0.0;
    }
    return sum / static_cast<double>(c.seeds.size());
  };
  const double base = mean_score(cfg, "baseline");
  std::string csv = "alpha,k_samples,n_simulations,mean_score,relative_change\n";
  out << "baseline alpha=" << cfg.bc_mix << " K=" << cfg.k_samples << " N=" << cfg.n_simulations
      << " mean score " << fmt(base) << "\n";
  for (double a : grid.alphas)
    for (int k : grid.ks)
      for (int n : grid.ns) {
        TrainConfig c = cfg;
        c.bc_mix = a;
        c.k_samples = k;
        c.n_simulations = n;
        const std::string tag = "a" + fmt(a, 2) + "-k" + std::to_string(k) + "-n" + std::to_string(n);
        const double s = mean_score(c, tag);
        const std::string rc = rel_change(s, base);
        out << tag << " score " << fmt(s) << " " << rc << "\n";
        csv += fmt(a, 2) + "," + std::to_string(k) + "," + std::to_string(n) + "," + fmt(s, 8) + "," + rc + "\n";
      }
  write_text(dir / "ablate.csv", csv);
  nlohmann::ordered_json j;
  j["mode"] = "train";
  j["seeds"] = seed_list(cfg.seeds);
  j["git_describe"] = git_describe();
  j["config"] = cfg.to_text();
  write_text(dir / "ablate.json", j.dump(2) + "\n");
  return 0;
}

int cmd_demo_info(const std::string& path, std::ostream& out) {
  const auto d = load_demos(path);
  out << "env " << d.env << "  obs_dim " << d.obs_dim << "  act_dim " << d.act_dim << "  trajectories "
      << d.trajectories.size() << "\n";
  out << std::left << std::setw(6) << "index" << std::setw(8) << "source" << std::setw(22) << "seed" << std::setw(8)
      << "length" << "return\n";
  for (std::size_t i = 0; i < d.trajectories.size(); ++i) {
    const auto& t = d.trajectories[i];
    out << std::left << std::setw(6) << i << std::setw(8) << (t.source() == Origin::kExpert ? "expert" : "agent")
        << std::setw(22) << t.seed() << std::setw(8) << t.length() << fmt(t.env_return()) << "\n";
  }
  const auto refs_path = references_path(path);
  if (fs::exists(refs_path)) {
    const auto r = load_references(refs_path);
    out << "J_expert " << r.j_expert << "  J_random " << r.j_random << "  (seed " << r.seed << ", "
        << r.random_episodes << " random episodes)\n";
  }
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"imitree: adversarial imitation with latent-model tree search"};
  app.require_subcommand(1, 1);

  std::string env, out_path, demos_path, config_path, checkpoint, seeds_text, policy, trace_path, mode = "planning";
  std::string grid_alpha, grid_k, grid_n;
  std::vector<std::string> sets;
  int n_demos = 5, random_episodes = 100, episodes = 0, oracle_seeds = 20;
  std::uint64_t seed = 0;
  std::int64_t budget = -1;

  auto* gen = app.add_subcommand("gen-expert", "Generate scripted expert demonstrations");
  gen->add_option("--env", env, "pendulum-swingup | point-reacher")->required();
  gen->add_option("--n", n_demos, "Number of demonstrations")->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Generation seed");
  gen->add_option("--random-episodes", random_episodes, "Episodes for the random reference")->check(CLI::PositiveNumber);
  gen->add_option("--out", out_path, "Demo file to write")->required();

  auto* tr = app.add_subcommand("train", "Train on demonstrations");
  tr->add_option("--demos", demos_path, "Demo file (with its .json references)")->required();
  tr->add_option("--out", out_path, "Output directory")->required();
  tr->add_option("--config", config_path, "key = value config file");
  tr->add_option("--set", sets, "Override one key (key=value); repeatable");
  tr->add_option("--seeds", seeds_text, "Comma-separated seeds");
  tr->add_option("--budget", budget, "Env-step budget");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  ev->add_option("--demos", demos_path, "Demo file providing the reference returns")->required();
  ev->add_option("--episodes", episodes, "Episodes (default: config value)");
  ev->add_option("--seed", seed, "Evaluation seed");
  ev->add_option("--policy", policy, "search | policy | bc | expert | random")
      ->check(CLI::IsMember({"search", "policy", "bc", "expert", "random"}));
  ev->add_option("--trace", trace_path, "Write a JSON-lines search trace");

  auto* ab = app.add_subcommand("ablate", "Planning / BC-mixing sweeps");
  ab->add_option("--mode", mode, "planning (stub oracle) | train")->check(CLI::IsMember({"planning", "train"}));
  ab->add_option("--config", config_path, "Baseline config file");
  ab->add_option("--set", sets, "Override one key (key=value); repeatable");
  ab->add_option("--demos", demos_path, "Demo file (train mode)");
  ab->add_option("--seeds", seeds_text, "Comma-separated seeds (train mode)");
  ab->add_option("--oracle-seeds", oracle_seeds, "Seeds per grid point (planning mode)")->check(CLI::PositiveNumber);
  ab->add_option("--alpha", grid_alpha, "Grid over bc_mix, e.g. 0,0.25");
  ab->add_option("--k", grid_k, "Grid over K, e.g. 4,8,16,24");
  ab->add_option("--n", grid_n, "Grid over N, e.g. 5,10,25,50");
  ab->add_option("--out", out_path, "Output directory");

  auto* di = app.add_subcommand("demo-info", "Print demo file contents");
  di->add_option("--demos", demos_path, "Demo file")->required();

  auto* pc = app.add_subcommand("print-config", "Print every config key with its value");
  pc->add_option("--config", config_path, "Config file to merge over the defaults");
  pc->add_option("--set", sets, "Override one key (key=value); repeatable");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_expert(env, n_demos, seed, random_episodes, out_path, out);
    if (*di) return cmd_demo_info(demos_path, out);
    if (*ev) return cmd_eval(checkpoint, demos_path, episodes, seed, policy, trace_path, out);

    TrainConfig cfg = build_config(config_path, sets);
    if (!seeds_text.empty()) cfg.seeds = parse_seeds(seeds_text);
    if (budget >= 0) cfg.budget_env_steps = budget;
    if (*pc) {
      cfg.validate();
      out << cfg.to_text();
      return 0;
    }
    if (*tr) return cmd_train(cfg, demos_path, out_path, out, err);
    if (*ab) {
      Grid grid;
      if (!grid_alpha.empty()) grid.alphas = parse_list<double>(grid_alpha, "alpha");
      if (!grid_k.empty()) grid.ks = parse_list<int>(grid_k, "K");
      if (!grid_n.empty()) grid.ns = parse_list<int>(grid_n, "N");
      cfg.validate();
      if (mode == "planning") return cmd_ablate_planning(cfg, grid, oracle_seeds, out_path, out);
      if (demos_path.empty()) throw InvalidArgument("ablate --mode train needs --demos");
      return cmd_ablate_train(cfg, grid, demos_path, out_path, out);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace imitree::cli
