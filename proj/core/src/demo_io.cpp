#include "imitree/demo_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

#include "imitree/error.hpp"

namespace imitree {
namespace {

constexpr char kMagic[8] = {'I', 'M', 'T', 'R', 'D', 'E', 'M', 'O'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw RuntimeError("demo file: truncated");
  return v;
}

void write_vector(std::ostream& os, const Eigen::VectorXd& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd read_vector(std::istream& is, int dim) {
  Eigen::VectorXd v(dim);
  if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(dim * sizeof(double)))) {
    throw RuntimeError("demo file: truncated");
  }
  return v;
}

}  // namespace

void save_demos(const std::filesystem::path& path, const DemoFile& demos) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  os.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(os, DemoFile::kVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(demos.env.size()));
  os.write(demos.env.data(), static_cast<std::streamsize>(demos.env.size()));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(demos.obs_dim));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(demos.act_dim));
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(demos.trajectories.size()));
  for (const auto& t : demos.trajectories) {
    t.validate();
    if (t.observation(0).size() != demos.obs_dim || (t.length() > 0 && t.action(0).size() != demos.act_dim)) {
      throw InvalidArgument("save_demos: trajectory dimensions do not match the header");
    }
    write_pod<std::uint64_t>(os, t.seed());
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(t.source()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.length()));
    for (const auto& o : t.observations()) write_vector(os, o);
    for (const auto& a : t.actions()) write_vector(os, a);
    for (double r : t.env_rewards_for_reporting()) write_pod<double>(os, r);
  }
  if (!os) throw RuntimeError("write failed for '" + path.string() + "'");
}

DemoFile load_demos(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot open demo file '" + path.string() + "'");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw RuntimeError("'" + path.string() + "' is not a demo file");
  }
  const auto version = read_pod<std::uint32_t>(is);
  if (version != DemoFile::kVersion) {
    throw RuntimeError("demo file version " + std::to_string(version) + " is not supported");
  }
  DemoFile out;
  out.env.resize(read_pod<std::uint32_t>(is));
  if (!is.read(out.env.data(), static_cast<std::streamsize>(out.env.size()))) throw RuntimeError("demo file: truncated");
  out.obs_dim = static_cast<int>(read_pod<std::uint32_t>(is));
  out.act_dim = static_cast<int>(read_pod<std::uint32_t>(is));
  const auto count = read_pod<std::uint32_t>(is);
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto seed = read_pod<std::uint64_t>(is);
    const auto source = read_pod<std::uint8_t>(is);
    if (source > 1) throw RuntimeError("demo file: bad source tag");
    const auto length = read_pod<std::uint32_t>(is);
    std::vector<Eigen::VectorXd> obs;
    for (std::uint32_t t = 0; t <= length; ++t) obs.push_back(read_vector(is, out.obs_dim));
    std::vector<Eigen::VectorXd> acts;
    for (std::uint32_t t = 0; t < length; ++t) acts.push_back(read_vector(is, out.act_dim));
    std::vector<double> rewards;
    for (std::uint32_t t = 0; t < length; ++t) rewards.push_back(read_pod<double>(is));
    Trajectory traj(static_cast<Origin>(source), seed, obs[0]);
    for (std::uint32_t t = 0; t < length; ++t) traj.append(acts[t], obs[t + 1], rewards[t]);
    traj.validate();
    out.trajectories.push_back(std::move(traj));
  }
  if (is.peek() != std::char_traits<char>::eof()) throw RuntimeError("demo file: trailing bytes");
  return out;
}

std::filesystem::path references_path(const std::filesystem::path& demo_path) {
  return std::filesystem::path(demo_path.string() + ".json");
}

void save_references(const std::filesystem::path& path, const DemoReferences& refs) {
  nlohmann::ordered_json j;
  j["env"] = refs.env;
  j["n_demos"] = refs.n_demos;
  j["seed"] = refs.seed;
  j["j_expert"] = refs.j_expert;
  j["j_random"] = refs.j_random;
  j["random_episodes"] = refs.random_episodes;
  j["git_describe"] = refs.git_describe;
  std::ofstream os(path);
  if (!os) throw RuntimeError("cannot open '" + path.string() + "' for writing");
  os << j.dump(2) << '\n';
}

DemoReferences load_references(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeError("cannot open reference file '" + path.string() + "'");
  try {
    const auto j = nlohmann::json::parse(is);
    DemoReferences r;
    r.env = j.at("env").get<std::string>();
    r.n_demos = j.at("n_demos").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.j_expert = j.at("j_expert").get<double>();
    r.j_random = j.at("j_random").get<double>();
    r.random_episodes = j.value("random_episodes", 0);
    r.git_describe = j.value("git_describe", std::string());
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw RuntimeError("reference file '" + path.string() + "': " + e.what());
  }
}

}  // namespace imitree
