#ifndef NAHT_TEAMS_SCRIPTED_HPP_
#define NAHT_TEAMS_SCRIPTED_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "naht/env/pursuit.hpp"
#include "naht/teams/policy.hpp"

namespace naht::teams {

/// Hand-written pursuit conventions. Each one picks a target point from the
/// 12-value observation and takes the action whose one-step integration lands
/// closest to it (lowest action index on ties).
enum class Convention {
  kGreedyChaser,  // prey's current position
  kInterceptor,   // prey's position one step ahead at its current velocity
  kFlanker        // far side of the prey from the predator closest to it
};

const char* to_string(Convention c);
Convention convention_from_string(const std::string& s);

/// Target point relative to the observing predator.
std::array<double, 2> convention_target(Convention c, const env::PursuitConfig& config,
                                        std::span<const double> obs);
int convention_action(Convention c, const env::PursuitConfig& config,
                      std::span<const double> obs);

/// `noise` is the probability of replacing the scripted action with a
/// uniformly random one.
PolicyHandle scripted_pursuit_policy(Convention c, const env::PursuitConfig& config = {},
                                     double noise = 0.0);
/// One uncontrolled team per convention.
std::vector<PolicyHandle> scripted_pursuit_policies(const env::PursuitConfig& config = {},
                                                    double noise = 0.0);

}  // namespace naht::teams

#endif  // NAHT_TEAMS_SCRIPTED_HPP_
