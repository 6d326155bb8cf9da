#ifndef NAHT_TEAMS_SELFPLAY_HPP_
#define NAHT_TEAMS_SELFPLAY_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "naht/env/env.hpp"
#include "naht/poam/trainer.hpp"
#include "naht/teams/policy.hpp"

namespace naht::teams {

struct SelfplayConfig {
  int iterations = 50;
  poam::PpoHyper hyper;
  int width = 64;
  /// Directory for per-seed checkpoints; nothing is written when empty.
  std::filesystem::path out_dir;
};

struct SelfplayFailure {
  std::uint64_t seed = 0;
  std::string reason;
};

struct SelfplayResult {
  std::vector<PolicyHandle> teams;  // one per successful seed, in seed order
  std::vector<SelfplayFailure> failures;
};

/// Trains one parameter-shared team per seed with every slot controlled.
/// Only "ippo" is supported. A seed whose losses go non-finite is dropped
/// and reported in `failures`.
SelfplayResult train_selfplay_teammates(const env::EnvFactory& factory,
                                        const std::string& algorithm,
                                        const std::vector<std::uint64_t>& seeds,
                                        const SelfplayConfig& config);

}  // namespace naht::teams

#endif  // NAHT_TEAMS_SELFPLAY_HPP_
