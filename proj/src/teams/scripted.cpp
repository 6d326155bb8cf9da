#include "naht/teams/scripted.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "naht/error.hpp"

namespace naht::teams {
namespace {

class ScriptedController : public Controller {
 public:
  ScriptedController(Convention c, env::PursuitConfig config, double noise)
      : convention_(c), config_(config), noise_(noise) {}

  int act(std::span<const double> obs, Rng& rng) override {
    if (noise_ > 0.0 && rng.bernoulli(noise_)) return int(rng.below(env::kPursuitActions));
    return convention_action(convention_, config_, obs);
  }

 private:
  Convention convention_;
  env::PursuitConfig config_;
  double noise_;
};

class ScriptedSource : public PolicySource {
 public:
  ScriptedSource(Convention c, env::PursuitConfig config, double noise)
      : convention_(c), config_(config), noise_(noise) {}
  std::unique_ptr<Controller> instantiate(const SlotContext&) const override {
    return std::make_unique<ScriptedController>(convention_, config_, noise_);
  }

 private:
  Convention convention_;
  env::PursuitConfig config_;
  double noise_;
};

}  // namespace

const char* to_string(Convention c) {
  switch (c) {
    case Convention::kGreedyChaser: return "greedy";
    case Convention::kInterceptor: return "interceptor";
    case Convention::kFlanker: return "flanker";
  }
  return "unknown";
}

Convention convention_from_string(const std::string& s) {
  if (s == "greedy") return Convention::kGreedyChaser;
  if (s == "interceptor") return Convention::kInterceptor;
  if (s == "flanker") return Convention::kFlanker;
  throw ConfigError("unknown scripted convention: " + s);
}

std::array<double, 2> convention_target(Convention c, const env::PursuitConfig& config,
                                        std::span<const double> obs) {
  if (obs.size() != std::size_t(env::kPursuitObsDim)) {
    throw ArgumentError("scripted pursuit policies expect 12 observation values");
  }
  const double qx = obs[8];
  const double qy = obs[9];
  switch (c) {
    case Convention::kGreedyChaser:
      return {qx, qy};
    case Convention::kInterceptor:
      return {qx + obs[10] * config.prey_max_speed, qy + obs[11] * config.prey_max_speed};
    case Convention::kFlanker: {
      double best = std::numeric_limits<double>::infinity();
      double wx = 0.0;
      double wy = 0.0;
      for (int k = 0; k < 2; ++k) {
        const double dx = obs[std::size_t(4 + 2 * k)] - qx;
        const double dy = obs[std::size_t(5 + 2 * k)] - qy;
        const double d = std::hypot(dx, dy);
        if (d < best) {
          best = d;
          wx = dx;
          wy = dy;
        }
      }
      if (best < 1e-9) return {qx, qy};
      const double offset = std::min(0.3, 0.5 * std::hypot(qx, qy));
      return {qx - offset * wx / best, qy - offset * wy / best};
    }
  }
  return {qx, qy};
}

int convention_action(Convention c, const env::PursuitConfig& config,
                      std::span<const double> obs) {
  const auto target = convention_target(c, config, obs);
  env::Body self;
  self.x = obs[0];
  self.y = obs[1];
  self.vx = obs[2] * config.prey_max_speed;
  self.vy = obs[3] * config.prey_max_speed;
  const double tx = self.x + target[0];
  const double ty = self.y + target[1];
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < env::kPursuitActions; ++a) {
    const env::Body next =
        env::integrate(self, a, config.accel, config.damping, config.predator_max_speed);
    const double d = std::hypot(next.x - tx, next.y - ty);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

PolicyHandle scripted_pursuit_policy(Convention c, const env::PursuitConfig& config,
                                     double noise) {
  PolicyHandle h;
  h.id = std::string("scripted:") + to_string(c);
  if (noise > 0.0) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), ":%.3g", noise);
    h.id += buf;
  }
  h.kind = PolicyKind::kScripted;
  h.env = "pursuit";
  h.source = std::make_shared<ScriptedSource>(c, config, noise);
  return h;
}

std::vector<PolicyHandle> scripted_pursuit_policies(const env::PursuitConfig& config,
                                                    double noise) {
  return {scripted_pursuit_policy(Convention::kGreedyChaser, config, noise),
          scripted_pursuit_policy(Convention::kInterceptor, config, noise),
          scripted_pursuit_policy(Convention::kFlanker, config, noise)};
}

}  // namespace naht::teams
