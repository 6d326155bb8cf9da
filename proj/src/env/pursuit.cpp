#include "naht/env/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "naht/error.hpp"

namespace naht::env {
namespace {

double distance(double ax, double ay, double bx, double by) {
  return std::hypot(ax - bx, ay - by);
}

void clamp_to_world(Body& b) {
  if (b.x > 1.0) {
    b.x = 1.0;
    b.vx = std::min(b.vx, 0.0);
  } else if (b.x < -1.0) {
    b.x = -1.0;
    b.vx = std::max(b.vx, 0.0);
  }
  if (b.y > 1.0) {
    b.y = 1.0;
    b.vy = std::min(b.vy, 0.0);
  } else if (b.y < -1.0) {
    b.y = -1.0;
    b.vy = std::max(b.vy, 0.0);
  }
}

}  // namespace

void PursuitConfig::validate() const {
  if (!(collision_radius > 0 && predator_max_speed > 0 && prey_max_speed > 0 && accel > 0 &&
        prey_accel > 0 && damping > 0 && shaping >= 0 && horizon >= 1)) {
    throw ConfigError("pursuit parameters must be positive");
  }
  if (prey_max_speed <= predator_max_speed) {
    throw ConfigError("pursuit prey must be faster than the predators");
  }
}

std::array<double, 2> action_direction(int action) {
  switch (action) {
    case 0: return {0.0, 0.0};
    case 1: return {1.0, 0.0};
    case 2: return {-1.0, 0.0};
    case 3: return {0.0, 1.0};
    case 4: return {0.0, -1.0};
    default: throw ArgumentError("pursuit action must be in 0..4");
  }
}

Body integrate(const Body& body, int action, double accel, double damping, double max_speed) {
  const auto dir = action_direction(action);
  Body b = body;
  b.vx = damping * b.vx + accel * dir[0];
  b.vy = damping * b.vy + accel * dir[1];
  const double speed = std::hypot(b.vx, b.vy);
  if (speed > max_speed) {
    b.vx *= max_speed / speed;
    b.vy *= max_speed / speed;
  }
  b.x += b.vx;
  b.y += b.vy;
  clamp_to_world(b);
  return b;
}

std::array<double, kPursuitActions> prey_lookahead_scores(const PursuitConfig& config,
                                                          const PursuitState& state) {
  std::array<Body, kNumPredators> ahead{};
  for (int i = 0; i < kNumPredators; ++i) {
    Body p = state.predators[std::size_t(i)];
    p.x += p.vx;
    p.y += p.vy;
    clamp_to_world(p);
    ahead[std::size_t(i)] = p;
  }
  std::array<double, kPursuitActions> scores{};
  for (int a = 0; a < kPursuitActions; ++a) {
    const Body prey =
        integrate(state.prey, a, config.prey_accel, config.damping, config.prey_max_speed);
    double best = config.prey_sense_range;
    for (const auto& p : ahead) best = std::min(best, distance(prey.x, prey.y, p.x, p.y));
    scores[std::size_t(a)] = best;
  }
  return scores;
}

int argmax_lowest_index(std::span<const double> scores) {
  int best = 0;
  for (std::size_t a = 1; a < scores.size(); ++a) {
    if (scores[a] > scores[std::size_t(best)]) best = int(a);
  }
  return best;
}

int prey_policy(const PursuitConfig& config, const PursuitState& state) {
  if (!config.scripted_prey) return 0;
  const auto scores = prey_lookahead_scores(config, state);
  return argmax_lowest_index(scores);
}

int predators_on_prey(const PursuitConfig& config, const PursuitState& state) {
  int n = 0;
  for (const auto& p : state.predators) {
    if (distance(p.x, p.y, state.prey.x, state.prey.y) <= config.collision_radius) ++n;
  }
  return n;
}

double pursuit_reward(const PursuitConfig& config, const PursuitState& state) {
  double shaping = 0.0;
  for (const auto& p : state.predators) shaping += distance(p.x, p.y, state.prey.x, state.prey.y);
  const double capture = predators_on_prey(config, state) >= 2 ? 1.0 : 0.0;
  return capture - config.shaping * shaping;
}

Transition pursuit_step(const PursuitConfig& config, PursuitState& state,
                        std::span<const int> joint_action) {
  if (state.t >= config.horizon) throw ArgumentError("pursuit stepped past its horizon");
  if (joint_action.size() != std::size_t(kNumPredators)) {
    throw ArgumentError("pursuit expects one action per predator");
  }
  const int prey_action = prey_policy(config, state);
  for (int i = 0; i < kNumPredators; ++i) {
    auto& p = state.predators[std::size_t(i)];
    p = integrate(p, joint_action[std::size_t(i)], config.accel, config.damping,
                  config.predator_max_speed);
  }
  state.prey = integrate(state.prey, prey_action, config.prey_accel, config.damping,
                         config.prey_max_speed);
  Transition tr;
  tr.t = state.t;
  tr.actions.assign(joint_action.begin(), joint_action.end());
  tr.reward = pursuit_reward(config, state);
  ++state.t;
  tr.done = state.t >= config.horizon;
  for (int i = 0; i < kNumPredators; ++i) tr.obs.push_back(pursuit_observe(config, state, i));
  return tr;
}

std::vector<double> pursuit_observe(const PursuitConfig& config, const PursuitState& state,
                                    int agent) {
  if (agent < 0 || agent >= kNumPredators) throw ArgumentError("predator index out of range");
  const auto& self = state.predators[std::size_t(agent)];
  const double vs = 1.0 / config.prey_max_speed;
  std::vector<double> o;
  o.reserve(kPursuitObsDim);
  o.push_back(self.x);
  o.push_back(self.y);
  o.push_back(self.vx * vs);
  o.push_back(self.vy * vs);
  for (int j = 0; j < kNumPredators; ++j) {
    if (j == agent) continue;
    const auto& other = state.predators[std::size_t(j)];
    o.push_back(other.x - self.x);
    o.push_back(other.y - self.y);
  }
  o.push_back(state.prey.x - self.x);
  o.push_back(state.prey.y - self.y);
  o.push_back(state.prey.vx * vs);
  o.push_back(state.prey.vy * vs);
  return o;
}

PursuitState pursuit_random_state(Rng& rng) {
  PursuitState s;
  for (auto& p : s.predators) {
    p.x = 2.0 * rng.uniform() - 1.0;
    p.y = 2.0 * rng.uniform() - 1.0;
  }
  s.prey.x = 2.0 * rng.uniform() - 1.0;
  s.prey.y = 2.0 * rng.uniform() - 1.0;
  return s;
}

Pursuit::Pursuit(PursuitConfig config) : config_(config) {
  config_.validate();
  spec_.name = "pursuit";
  spec_.num_agents = kNumPredators;
  spec_.obs_dim = kPursuitObsDim;
  spec_.num_actions = kPursuitActions;
  spec_.horizon = config_.horizon;
}

JointObs Pursuit::reset(Rng& rng) {
  state_ = pursuit_random_state(rng);
  JointObs obs;
  for (int i = 0; i < kNumPredators; ++i) obs.push_back(pursuit_observe(config_, state_, i));
  return obs;
}

Transition Pursuit::step(std::span<const int> joint_action, Rng&) {
  return pursuit_step(config_, state_, joint_action);
}

EnvFactory pursuit_factory(PursuitConfig config) {
  return [config] { return std::make_unique<Pursuit>(config); };
}

void write_pursuit_trajectory(const std::filesystem::path& path, const PursuitConfig& config,
                              const teams::TeamSpec& team, std::uint64_t seed) {
  if (team.num_agents() != kNumPredators) throw ConfigError("pursuit team needs 3 slots");
  Pursuit env(config);
  // Same stream layout as run_episodes for episode 0.
  Rng episode_rng = Rng(seed).split(std::uint64_t{0});
  Rng env_rng = episode_rng.split("env");
  std::vector<std::unique_ptr<teams::Controller>> controllers;
  std::vector<Rng> action_rngs;
  for (int k = 0; k < kNumPredators; ++k) {
    controllers.push_back(
        team.slots[std::size_t(k)].instantiate({k, kNumPredators, team.controlled_mask}));
    action_rngs.push_back(episode_rng.split("act", std::uint64_t(k)));
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t,entity,x,y,vx,vy,action,reward\n";
  char line[256];
  JointObs obs = env.reset(env_rng);
  for (int t = 0; t < config.horizon; ++t) {
    std::vector<int> joint(kNumPredators);
    for (int k = 0; k < kNumPredators; ++k) {
      joint[std::size_t(k)] =
          controllers[std::size_t(k)]->act(obs[std::size_t(k)], action_rngs[std::size_t(k)]);
    }
    const PursuitState before = env.state();
    const int prey_action = prey_policy(config, before);
    Transition tr = env.step(joint, env_rng);
    for (int k = 0; k <= kNumPredators; ++k) {
      const Body& b = k < kNumPredators ? before.predators[std::size_t(k)] : before.prey;
      const int a = k < kNumPredators ? joint[std::size_t(k)] : prey_action;
      std::snprintf(line, sizeof(line), "%d,%d,%.9g,%.9g,%.9g,%.9g,%d,%.9g\n", t, k, b.x, b.y,
                    b.vx, b.vy, a, tr.reward);
      out << line;
    }
    if (tr.done) break;
    obs = std::move(tr.obs);
  }
}

}  // namespace naht::env
