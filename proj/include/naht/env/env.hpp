#ifndef NAHT_ENV_ENV_HPP_
#define NAHT_ENV_ENV_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "naht/rng.hpp"
#include "naht/teams/policy.hpp"

namespace naht::env {

struct EnvSpec {
  std::string name;
  int num_agents = 0;
  int obs_dim = 0;
  int num_actions = 0;
  int horizon = 0;

  /// Throws ConfigError unless M >= 2 and every dimension is positive.
  void validate() const;
  std::string fingerprint() const;
};

using JointObs = std::vector<std::vector<double>>;

struct Transition {
  JointObs obs;  // observations after the step, one per agent
  std::vector<int> actions;
  double reward = 0.0;  // shared team reward
  bool done = false;
  int t = 0;
};

/// Dec-POMDP with homogeneous agents and a shared reward.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual JointObs reset(Rng& rng) = 0;
  virtual Transition step(std::span<const int> joint_action, Rng& rng) = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

/// One recorded episode. Arrays are time-major: obs[(t * M + i) * obs_dim + k]
/// is what agent i saw when choosing actions[t * M + i].
struct EpisodeRecord {
  int length = 0;
  std::vector<double> obs;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
  std::vector<std::uint8_t> controlled;  // per slot, constant within the episode
  int num_controlled = 0;
  int uncontrolled_index = -1;
  std::string team_label;
};

class EpisodeBatch {
 public:
  EpisodeBatch() = default;
  EpisodeBatch(EnvSpec spec, double gamma) : spec_(std::move(spec)), gamma_(gamma) {}

  const EnvSpec& spec() const { return spec_; }
  double gamma() const { return gamma_; }
  std::size_t size() const { return episodes_.size(); }
  const EpisodeRecord& episode(std::size_t e) const { return episodes_.at(e); }
  std::vector<EpisodeRecord>& episodes() { return episodes_; }
  const std::vector<EpisodeRecord>& episodes() const { return episodes_; }
  void append(EpisodeRecord r) { episodes_.push_back(std::move(r)); }

  std::span<const double> obs(std::size_t e, int t, int agent) const;
  int action(std::size_t e, int t, int agent) const;
  double reward(std::size_t e, int t) const { return episodes_[e].rewards[std::size_t(t)]; }
  bool controlled(std::size_t e, int agent) const {
    return episodes_[e].controlled[std::size_t(agent)] != 0;
  }

  /// Teammate targets o_{-i}: the other agents' observations concatenated in
  /// ascending slot order, skipping i.
  std::vector<double> teammate_obs(std::size_t e, int t, int agent) const;
  std::vector<int> teammate_actions(std::size_t e, int t, int agent) const;
  /// Slot indices of i's teammates in target order.
  std::vector<int> teammate_slots(int agent) const;

  long total_steps() const;
  int max_length() const;

 private:
  EnvSpec spec_;
  double gamma_ = 0.99;
  std::vector<EpisodeRecord> episodes_;
};

/// Undiscounted sum of team rewards of one episode.
double episode_return(const EpisodeBatch& batch, std::size_t episode);

using TeamSampler = std::function<teams::TeamSpec(std::size_t episode, Rng& rng)>;

/// Plays `count` episodes. Episode e draws from the substream (seed, e), so
/// results depend only on (seed, team, parameters).
EpisodeBatch run_episodes(const EnvFactory& factory, const teams::TeamSpec& team, int count,
                          std::uint64_t seed, double gamma = 0.99);
EpisodeBatch run_episodes(const EnvFactory& factory, const TeamSampler& sampler, int count,
                          std::uint64_t seed, double gamma = 0.99);

/// Writes the batch as checkpoint-format entries for offline inspection.
void save_episode_batch(const std::filesystem::path& path, const EpisodeBatch& batch);

}  // namespace naht::env

#endif  // NAHT_ENV_ENV_HPP_
