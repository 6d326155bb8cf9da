#ifndef NAHT_ENV_PURSUIT_HPP_
#define NAHT_ENV_PURSUIT_HPP_

#include <array>
#include <filesystem>
#include <span>
#include <vector>

#include "naht/env/env.hpp"

namespace naht::env {

// Three predators chase one scripted prey on the square [-1, 1]^2.
//
// Actions (predators and prey alike): 0 no-op, 1 +x, 2 -x, 3 +y, 4 -y.
// Integration per step: v <- damping * v + accel * dir(action), speed capped,
// p <- p + v, p clamped to the square (the velocity component pushing into a
// wall is zeroed). Reward after the move:
//   1[>= 2 predators within collision_radius of the prey]
//   - shaping * sum_i |pred_i - prey|.
//
// Observation of predator i (12 values):
//   [0, 2)   own position
//   [2, 4)   own velocity / prey_max_speed
//   [4, 8)   positions of the other two predators relative to i, ascending slot
//   [8, 10)  prey position relative to i
//   [10, 12) prey velocity / prey_max_speed

inline constexpr int kNumPredators = 3;
inline constexpr int kPursuitActions = 5;
inline constexpr int kPursuitObsDim = 12;

struct PursuitConfig {
  double collision_radius = 0.1;
  double predator_max_speed = 0.08;
  double prey_max_speed = 0.104;
  double accel = 0.1;
  double prey_accel = 0.1;
  double damping = 0.75;
  double shaping = 0.01;
  int horizon = 100;
  /// Predator distances beyond this are treated as equal by the prey.
  double prey_sense_range = 4.0;
  /// When false the prey always takes the no-op action.
  bool scripted_prey = true;

  void validate() const;
};

struct Body {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
};

struct PursuitState {
  std::array<Body, kNumPredators> predators{};
  Body prey{};
  int t = 0;
};

/// Unit direction of a discrete action.
std::array<double, 2> action_direction(int action);

/// One integration step of a single body.
Body integrate(const Body& body, int action, double accel, double damping, double max_speed);

/// Minimum predator distance after each prey action with predators advanced
/// by their current velocity; saturates at prey_sense_range.
std::array<double, kPursuitActions> prey_lookahead_scores(const PursuitConfig& config,
                                                          const PursuitState& state);
/// Index of the largest score, lowest index on ties.
int argmax_lowest_index(std::span<const double> scores);
int prey_policy(const PursuitConfig& config, const PursuitState& state);

Transition pursuit_step(const PursuitConfig& config, PursuitState& state,
                        std::span<const int> joint_action);
std::vector<double> pursuit_observe(const PursuitConfig& config, const PursuitState& state,
                                    int agent);
/// Number of predators within the collision radius of the prey.
int predators_on_prey(const PursuitConfig& config, const PursuitState& state);
double pursuit_reward(const PursuitConfig& config, const PursuitState& state);

PursuitState pursuit_random_state(Rng& rng);

class Pursuit : public Environment {
 public:
  explicit Pursuit(PursuitConfig config = {});
  const EnvSpec& spec() const override { return spec_; }
  JointObs reset(Rng& rng) override;
  Transition step(std::span<const int> joint_action, Rng& rng) override;

  const PursuitState& state() const { return state_; }
  void set_state(const PursuitState& s) { state_ = s; }
  const PursuitConfig& config() const { return config_; }

 private:
  PursuitConfig config_;
  EnvSpec spec_;
  PursuitState state_;
};

EnvFactory pursuit_factory(PursuitConfig config = {});

/// Plays one episode with `team` and writes (t, entity, x, y, vx, vy, action,
/// reward) rows, entity 0..2 predators and 3 the prey.
void write_pursuit_trajectory(const std::filesystem::path& path, const PursuitConfig& config,
                              const teams::TeamSpec& team, std::uint64_t seed);

}  // namespace naht::env

#endif  // NAHT_ENV_PURSUIT_HPP_
