#include "naht/env/bitgame.hpp"

#include <cmath>
#include <string>

#include "naht/error.hpp"

namespace naht::env {
namespace {

constexpr double kTeammateP = 1.0 / 3.0;

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError(std::string(what) + " must lie in [0, 1]");
}

}  // namespace

BitGameState bitgame_initial_state(const BitGameConfig& config) {
  return {0, std::vector<int>(std::size_t(config.num_agents), 0)};
}

std::vector<double> bitgame_observe(const BitGameConfig& config, const BitGameState& state,
                                    int agent) {
  const auto m = std::size_t(config.num_agents);
  std::vector<double> o(2 * m, 0.0);
  o[std::size_t(agent)] = 1.0;
  for (std::size_t k = 0; k < m; ++k) o[m + k] = double(state.prev_joint_action[k]);
  return o;
}

Transition bitgame_step(const BitGameConfig& config, BitGameState& state,
                        std::span<const int> joint_action) {
  if (state.t >= config.horizon) throw ArgumentError("bit game stepped past its horizon");
  if (joint_action.size() != std::size_t(config.num_agents)) {
    throw ArgumentError("joint action has wrong number of agents");
  }
  int sum = 0;
  for (int b : joint_action) {
    if (b != 0 && b != 1) throw ArgumentError("bit game actions must be 0 or 1");
    sum += b;
  }
  Transition tr;
  tr.t = state.t;
  tr.actions.assign(joint_action.begin(), joint_action.end());
  tr.reward = sum == 1 ? config.reward_scale : 0.0;
  state.prev_joint_action.assign(joint_action.begin(), joint_action.end());
  ++state.t;
  tr.done = state.t >= config.horizon;
  for (int i = 0; i < config.num_agents; ++i) tr.obs.push_back(bitgame_observe(config, state, i));
  return tr;
}

BitGame::BitGame(BitGameConfig config) : config_(config) {
  spec_.name = "bitgame";
  spec_.num_agents = config.num_agents;
  spec_.obs_dim = 2 * config.num_agents;
  spec_.num_actions = 2;
  spec_.horizon = config.horizon;
  spec_.validate();
  state_ = bitgame_initial_state(config_);
}

JointObs BitGame::reset(Rng&) {
  state_ = bitgame_initial_state(config_);
  JointObs obs;
  for (int i = 0; i < config_.num_agents; ++i) obs.push_back(bitgame_observe(config_, state_, i));
  return obs;
}

Transition BitGame::step(std::span<const int> joint_action, Rng&) {
  return bitgame_step(config_, state_, joint_action);
}

EnvFactory bitgame_factory(BitGameConfig config) {
  return [config] { return std::make_unique<BitGame>(config); };
}

double static_win_prob(int num_agents, double p) {
  if (num_agents < 1) throw ArgumentError("static_win_prob needs at least one agent");
  check_probability(p, "p");
  return double(num_agents) * p * std::pow(1.0 - p, double(num_agents - 1));
}

double aht_win_prob(double p_aht) {
  check_probability(p_aht, "p_aht");
  const double q = kTeammateP;
  // AHT agent plays 1 and both teammates play 0, or plays 0 and exactly one
  // teammate plays 1.
  return p_aht * (1.0 - q) * (1.0 - q) + (1.0 - p_aht) * 2.0 * q * (1.0 - q);
}

double shared_naht_win_prob(double p) {
  check_probability(p, "p");
  return (1.0 - p) * (kTeammateP + p);
}

double asym_naht_win_prob(double p_naht) {
  check_probability(p_naht, "p_naht");
  return kTeammateP + p_naht / 3.0;
}

double brute_force_win_prob(std::span<const double> probs) {
  const std::size_t m = probs.size();
  if (m > 20) throw ArgumentError("brute_force_win_prob limited to 20 agents");
  for (double p : probs) check_probability(p, "p");
  double total = 0.0;
  for (std::uint32_t outcome = 0; outcome < (1u << m); ++outcome) {
    if (std::popcount(outcome) != 1) continue;
    double prob = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      prob *= (outcome >> i) & 1u ? probs[i] : 1.0 - probs[i];
    }
    total += prob;
  }
  return total;
}

}  // namespace naht::env
