#include "naht/env/env.hpp"

#include <algorithm>

#include "naht/error.hpp"
#include "naht/nn/checkpoint.hpp"

namespace naht::env {

void EnvSpec::validate() const {
  if (num_agents < 2) throw ConfigError("environment " + name + " needs at least 2 agents");
  if (obs_dim <= 0 || num_actions <= 0) {
    throw ConfigError("environment " + name + " has empty observation or action space");
  }
  if (horizon < 1) throw ConfigError("environment " + name + " horizon must be >= 1");
}

std::string EnvSpec::fingerprint() const {
  return name + "/M" + std::to_string(num_agents) + "/obs" + std::to_string(obs_dim) + "/act" +
         std::to_string(num_actions) + "/T" + std::to_string(horizon);
}

std::span<const double> EpisodeBatch::obs(std::size_t e, int t, int agent) const {
  const auto& r = episodes_[e];
  const std::size_t d = std::size_t(spec_.obs_dim);
  const std::size_t off = (std::size_t(t) * std::size_t(spec_.num_agents) + std::size_t(agent)) * d;
  return {r.obs.data() + off, d};
}

int EpisodeBatch::action(std::size_t e, int t, int agent) const {
  return episodes_[e].actions[std::size_t(t) * std::size_t(spec_.num_agents) + std::size_t(agent)];
}

std::vector<int> EpisodeBatch::teammate_slots(int agent) const {
  std::vector<int> slots;
  for (int j = 0; j < spec_.num_agents; ++j) {
    if (j != agent) slots.push_back(j);
  }
  return slots;
}

std::vector<double> EpisodeBatch::teammate_obs(std::size_t e, int t, int agent) const {
  std::vector<double> out;
  for (int j : teammate_slots(agent)) {
    auto o = obs(e, t, j);
    out.insert(out.end(), o.begin(), o.end());
  }
  return out;
}

std::vector<int> EpisodeBatch::teammate_actions(std::size_t e, int t, int agent) const {
  std::vector<int> out;
  for (int j : teammate_slots(agent)) out.push_back(action(e, t, j));
  return out;
}

long EpisodeBatch::total_steps() const {
  long n = 0;
  for (const auto& r : episodes_) n += r.length;
  return n;
}

int EpisodeBatch::max_length() const {
  int n = 0;
  for (const auto& r : episodes_) n = std::max(n, r.length);
  return n;
}

double episode_return(const EpisodeBatch& batch, std::size_t episode) {
  double sum = 0.0;
  for (double r : batch.episode(episode).rewards) sum += r;
  return sum;
}

namespace {

EpisodeRecord play_episode(Environment& env, const teams::TeamSpec& team, Rng episode_rng) {
  const EnvSpec& spec = env.spec();
  const int m = spec.num_agents;
  if (team.num_agents() != m) {
    throw ConfigError("team has " + std::to_string(team.num_agents()) + " slots, environment " +
                      spec.name + " has " + std::to_string(m) + " agents");
  }
  std::vector<std::unique_ptr<teams::Controller>> controllers;
  std::vector<Rng> action_rngs;
  for (int k = 0; k < m; ++k) {
    const auto& handle = team.slots[std::size_t(k)];
    if (!handle.source) throw ConfigError("slot " + std::to_string(k) + " has no policy");
    const std::string fp = handle.source->env_fingerprint();
    if (!fp.empty() && fp != spec.fingerprint()) {
      throw ConfigError("policy " + handle.id + " was built for " + fp + " but environment is " +
                        spec.fingerprint());
    }
    controllers.push_back(handle.instantiate({k, m, team.controlled_mask}));
    action_rngs.push_back(episode_rng.split("act", std::uint64_t(k)));
  }
  Rng env_rng = episode_rng.split("env");

  EpisodeRecord rec;
  rec.controlled = team.controlled_mask;
  rec.num_controlled = team.num_controlled;
  rec.uncontrolled_index = team.uncontrolled_index;
  rec.team_label = team.label();
  const std::size_t d = std::size_t(spec.obs_dim);
  rec.obs.reserve(std::size_t(spec.horizon) * std::size_t(m) * d);

  JointObs obs = env.reset(env_rng);
  std::vector<int> joint(std::size_t(m), 0);
  for (int t = 0; t < spec.horizon; ++t) {
    for (int k = 0; k < m; ++k) {
      const auto& o = obs[std::size_t(k)];
      if (o.size() != d) throw ConfigError("environment emitted wrong observation size");
      rec.obs.insert(rec.obs.end(), o.begin(), o.end());
      const int a = controllers[std::size_t(k)]->act(o, action_rngs[std::size_t(k)]);
      if (a < 0 || a >= spec.num_actions) {
        throw ConfigError("policy " + team.slots[std::size_t(k)].id + " produced action " +
                          std::to_string(a) + " outside the action space");
      }
      joint[std::size_t(k)] = a;
    }
    Transition tr = env.step(joint, env_rng);
    rec.actions.insert(rec.actions.end(), joint.begin(), joint.end());
    rec.rewards.push_back(tr.reward);
    rec.dones.push_back(tr.done ? 1 : 0);
    ++rec.length;
    if (tr.done) break;
    obs = std::move(tr.obs);
  }
  if (!rec.dones.empty()) rec.dones.back() = 1;
  return rec;
}

}  // namespace

EpisodeBatch run_episodes(const EnvFactory& factory, const TeamSampler& sampler, int count,
                          std::uint64_t seed, double gamma) {
  auto env = factory();
  const EnvSpec spec = env->spec();
  spec.validate();
  EpisodeBatch batch(spec, gamma);
  const Rng root(seed);
  for (int e = 0; e < count; ++e) {
    Rng episode_rng = root.split(std::uint64_t(e));
    Rng team_rng = episode_rng.split("team");
    const teams::TeamSpec team = sampler(std::size_t(e), team_rng);
    batch.append(play_episode(*env, team, episode_rng));
  }
  return batch;
}

EpisodeBatch run_episodes(const EnvFactory& factory, const teams::TeamSpec& team, int count,
                          std::uint64_t seed, double gamma) {
  return run_episodes(
      factory, [&team](std::size_t, Rng&) { return team; }, count, seed, gamma);
}

void save_episode_batch(const std::filesystem::path& path, const EpisodeBatch& batch) {
  nn::ParamStore<double> store;
  for (std::size_t e = 0; e < batch.size(); ++e) {
    const auto& r = batch.episode(e);
    const std::string p = "episode" + std::to_string(e) + ".";
    const auto len = std::size_t(r.length);
    const auto m = std::size_t(batch.spec().num_agents);
    auto put = [&](const std::string& name, std::vector<std::size_t> shape, auto&& values) {
      const std::size_t i = store.add(p + name, std::move(shape));
      auto& dst = store.value(i).data;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = double(values[k]);
    };
    put("obs", {len, m, std::size_t(batch.spec().obs_dim)}, r.obs);
    put("actions", {len, m}, r.actions);
    put("rewards", {len}, r.rewards);
    put("dones", {len}, r.dones);
    put("controlled", {m}, r.controlled);
  }
  nn::save_checkpoint(path, store);
}

}  // namespace naht::env
