#ifndef NAHT_ENV_BITGAME_HPP_
#define NAHT_ENV_BITGAME_HPP_

#include <span>
#include <vector>

#include "naht/env/env.hpp"

namespace naht::env {

// M-agent bit matrix game. Each step every agent picks a bit; the team wins
// the step (reward `reward_scale`) when exactly one bit is set. Agents observe
// one-hot(own index) followed by the previous joint action (zeros at t = 0).

struct BitGameConfig {
  int num_agents = 3;
  int horizon = 25;
  double reward_scale = 3.0;
};

struct BitGameState {
  int t = 0;
  std::vector<int> prev_joint_action;
};

BitGameState bitgame_initial_state(const BitGameConfig& config);
std::vector<double> bitgame_observe(const BitGameConfig& config, const BitGameState& state,
                                    int agent);
/// Advances the state in place and returns the transition.
Transition bitgame_step(const BitGameConfig& config, BitGameState& state,
                        std::span<const int> joint_action);

class BitGame : public Environment {
 public:
  explicit BitGame(BitGameConfig config = {});
  const EnvSpec& spec() const override { return spec_; }
  JointObs reset(Rng& rng) override;
  Transition step(std::span<const int> joint_action, Rng& rng) override;
  const BitGameState& state() const { return state_; }

 private:
  BitGameConfig config_;
  EnvSpec spec_;
  BitGameState state_;
};

EnvFactory bitgame_factory(BitGameConfig config = {});

// Win probabilities P(sum of bits = 1) under independent Bernoulli play.

/// All M agents play 1 with probability p: M p (1 - p)^(M - 1).
double static_win_prob(int num_agents, double p);
/// One agent plays p_aht next to two Bernoulli(1/3) teammates. Always 4/9.
double aht_win_prob(double p_aht);
/// Two agents share p next to one Bernoulli(1/3) teammate: (1 - p)(1/3 + p).
double shared_naht_win_prob(double p);
/// One agent plays 0, another plays 1 with probability p_naht, third is
/// Bernoulli(1/3): 1/3 + p_naht / 3.
double asym_naht_win_prob(double p_naht);
/// Exhaustive sum over all 2^M outcomes. Rejects M > 20.
double brute_force_win_prob(std::span<const double> probs);

}  // namespace naht::env

#endif  // NAHT_ENV_BITGAME_HPP_
