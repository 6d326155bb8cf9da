#include "naht/teams/sampling.hpp"

#include <numeric>
#include <utility>

#include "naht/error.hpp"

namespace naht::teams {

const char* to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kNahtUniform: return "naht_uniform";
    case SamplingMode::kAhtFixedN1: return "aht_fixed_n1";
    case SamplingMode::kSelfplayFull: return "selfplay_full";
  }
  return "unknown";
}

SamplingMode sampling_mode_from_string(const std::string& s) {
  if (s == "naht_uniform") return SamplingMode::kNahtUniform;
  if (s == "aht_fixed_n1") return SamplingMode::kAhtFixedN1;
  if (s == "selfplay_full") return SamplingMode::kSelfplayFull;
  throw ConfigError("unknown sampling mode: " + s);
}

std::vector<std::uint8_t> random_mask(int n, int m, Rng& rng) {
  std::vector<int> slots(static_cast<std::size_t>(m));
  std::iota(slots.begin(), slots.end(), 0);
  // partial Fisher-Yates: the first n entries are a uniform n-subset
  for (int k = 0; k < n; ++k) {
    const auto j = std::size_t(k) + std::size_t(rng.below(std::uint64_t(m - k)));
    std::swap(slots[std::size_t(k)], slots[j]);
  }
  std::vector<std::uint8_t> mask(std::size_t(m), 0);
  for (int k = 0; k < n; ++k) mask[std::size_t(slots[std::size_t(k)])] = 1;
  return mask;
}

TeamSpec sample_team_with_n(int n, std::span<const PolicyHandle> uncontrolled,
                            const PolicyHandle& controlled, int num_agents, Rng& rng) {
  if (num_agents < 2) throw ConfigError("teams need at least 2 agents");
  if (n < 0 || n > num_agents) throw ConfigError("N outside [0, M]");
  int team_index = -1;
  const PolicyHandle* mates = nullptr;
  if (n < num_agents) {
    if (uncontrolled.empty()) throw ConfigError("uncontrolled set U is empty");
    team_index = int(rng.below(uncontrolled.size()));
    mates = &uncontrolled[std::size_t(team_index)];
  }
  auto mask = random_mask(n, num_agents, rng);
  return make_team(controlled, mates, std::move(mask), team_index);
}

TeamSpec sample_team(const SamplingScheme& scheme, std::span<const PolicyHandle> uncontrolled,
                     const PolicyHandle& controlled, int num_agents, Rng& rng) {
  if (num_agents < 2) throw ConfigError("teams need at least 2 agents");
  switch (scheme.mode) {
    case SamplingMode::kNahtUniform: {
      if (uncontrolled.empty()) throw ConfigError("uncontrolled set U is empty");
      const int n = 1 + int(rng.below(std::uint64_t(num_agents - 1)));
      return sample_team_with_n(n, uncontrolled, controlled, num_agents, rng);
    }
    case SamplingMode::kAhtFixedN1:
      if (uncontrolled.empty()) throw ConfigError("uncontrolled set U is empty");
      return sample_team_with_n(1, uncontrolled, controlled, num_agents, rng);
    case SamplingMode::kSelfplayFull:
      return sample_team_with_n(num_agents, uncontrolled, controlled, num_agents, rng);
  }
  throw ConfigError("unknown sampling mode");
}

}  // namespace naht::teams
