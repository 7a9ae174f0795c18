#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imitree/replay.hpp"

namespace imitree {

/// Demonstration container. Byte layout, integers little-endian, reals f64:
///
///   magic        8 bytes  "IMTRDEMO"
///   version      u32      currently 1
///   env_len      u32, env name bytes
///   obs_dim      u32
///   act_dim      u32
///   count        u32      number of trajectories
///   per trajectory:
///     seed       u64
///     source     u8       0 = agent, 1 = expert
///     length     u32      T transitions
///     obs        f64[(T+1) * obs_dim]   row t holds s_t
///     actions    f64[T * act_dim]       row t holds a_t
///     rewards    f64[T]                 environment rewards (reporting only)
struct DemoFile {
  static constexpr std::uint32_t kVersion = 1;

  std::string env;
  int obs_dim = 0;
  int act_dim = 0;
  std::vector<Trajectory> trajectories;
};

void save_demos(const std::filesystem::path& path, const DemoFile& demos);
DemoFile load_demos(const std::filesystem::path& path);

/// Reference returns stored next to a demo file as "<file>.json".
struct DemoReferences {
  std::string env;
  int n_demos = 0;
  std::uint64_t seed = 0;
  double j_expert = 0.0;
  double j_random = 0.0;
  int random_episodes = 0;
  std::string git_describe;
};

std::filesystem::path references_path(const std::filesystem::path& demo_path);
void save_references(const std::filesystem::path& path, const DemoReferences& refs);
DemoReferences load_references(const std::filesystem::path& path);

}  // namespace imitree
