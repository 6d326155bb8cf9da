#ifndef NAHT_CLI_CONFIG_HPP_
#define NAHT_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "naht/env/bitgame.hpp"
#include "naht/env/pursuit.hpp"
#include "naht/poam/trainer.hpp"
#include "naht/teams/policy.hpp"

namespace naht::cli {

struct EnvConfig {
  std::string name = "bitgame";  // bitgame or pursuit
  env::BitGameConfig bitgame;
  env::PursuitConfig pursuit;

  env::EnvFactory factory() const;
};

/// Everything a run needs. JSON keys mirror the field names; nested objects
/// are "env" (with "name" and "params"), "hyper" and "selfplay".
struct RunConfig {
  EnvConfig env;
  std::string variant = "poam";
  poam::PpoHyper hyper;
  int embed_dim = 64;
  int width = 64;
  int float_bits = 32;
  long total_env_steps = 2'000'000;
  int checkpoint_every = 0;  // iterations; 0 keeps only the final checkpoint
  int eval_episodes = 128;
  std::vector<std::uint64_t> seeds = {1};
  std::string registry;  // manifest path; empty uses the built-in teammates
  std::string output_dir = "runs";
  /// Built-in teammates: Bernoulli bit players or scripted pursuers.
  double bernoulli_p = 1.0 / 3.0;
  double scripted_noise = 0.0;

  struct Selfplay {
    std::vector<std::uint64_t> train_seeds;
    std::vector<std::uint64_t> holdout_seeds;
    long env_steps = 500'000;
    bool include_scripted = true;
  } selfplay;

  /// Iterations needed to reach total_env_steps with fixed-length episodes.
  int iterations() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the
/// offending key path; JSON syntax errors report line and column.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
std::string run_config_to_json(const RunConfig& config);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
/// Applies NAHT_SEED (comma-separated list) and NAHT_OUT_DIR.
void apply_env_overrides(RunConfig& config, const EnvLookup& lookup);
EnvLookup process_env();

/// Uncontrolled teams for training (tag "train") or OOD evaluation
/// ("holdout"). Without a registry the built-in teammates form the training
/// set and the holdout set is empty.
std::vector<teams::PolicyHandle> uncontrolled_set(const RunConfig& config,
                                                  const std::string& tag);

}  // namespace naht::cli

#endif  // NAHT_CLI_CONFIG_HPP_
