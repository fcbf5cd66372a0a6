#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "rrpi/estimation.hpp"
#include "rrpi/generators.hpp"
#include "rrpi/io.hpp"

namespace rrpi {

enum class InstanceSource { File, Random, Gridworld };

/// Mirrors the JSON config file (docs/config.md).
struct ExperimentConfig {
  InstanceSource source = InstanceSource::Random;
  std::filesystem::path instance_path;
  RandomMdpSpec random;
  std::size_t random_members = 3;
  GridworldSpec gridworld;
  /// Raw "solver" object, applied on top of the per-instance driver defaults.
  json solver = json::object();
  EnsembleSpec ensemble;
  bool ensemble_seed_set = false;
  std::filesystem::path dataset_path;
  std::size_t dataset_size = 0;
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  std::size_t trials = 10;
  std::size_t jobs = 1;

  /// Parses and validates; referenced files must exist (IoError otherwise).
  static ExperimentConfig from_json(const json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitCheckFailed = 3;

/// Subcommands: gen, solve, rrpi, check, ablate, estimate.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rrpi
