#ifndef NAHT_TEAMS_SAMPLING_HPP_
#define NAHT_TEAMS_SAMPLING_HPP_

#include <span>
#include <string>

#include "naht/teams/policy.hpp"

namespace naht::teams {

enum class SamplingMode {
  kNahtUniform,  // N ~ Uniform{1..M-1}
  kAhtFixedN1,   // N = 1
  kSelfplayFull  // N = M, evaluation and teammate generation only
};

const char* to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& s);

struct SamplingScheme {
  SamplingMode mode = SamplingMode::kNahtUniform;
};

/// Draws the team for one episode: N from the scheme, N uniformly placed
/// slots bound to `controlled`, the rest filled by one team drawn uniformly
/// from U.
TeamSpec sample_team(const SamplingScheme& scheme, std::span<const PolicyHandle> uncontrolled,
                     const PolicyHandle& controlled, int num_agents, Rng& rng);

/// Same draw with N fixed by the caller (0 <= N <= M).
TeamSpec sample_team_with_n(int n, std::span<const PolicyHandle> uncontrolled,
                            const PolicyHandle& controlled, int num_agents, Rng& rng);

/// Uniform random mask with exactly n bits set among m slots.
std::vector<std::uint8_t> random_mask(int n, int m, Rng& rng);

}  // namespace naht::teams

#endif  // NAHT_TEAMS_SAMPLING_HPP_
