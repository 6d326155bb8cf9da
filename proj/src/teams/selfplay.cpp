#include "naht/teams/selfplay.hpp"

#include "naht/error.hpp"
#include "naht/poam/agent.hpp"

namespace naht::teams {

SelfplayResult train_selfplay_teammates(const env::EnvFactory& factory,
                                        const std::string& algorithm,
                                        const std::vector<std::uint64_t>& seeds,
                                        const SelfplayConfig& config) {
  if (algorithm != "ippo") throw ConfigError("unsupported self-play algorithm: " + algorithm);
  SelfplayResult result;
  for (const std::uint64_t seed : seeds) {
    try {
      poam::Trainer<float> trainer(factory, {}, poam::TrainVariant::preset("ippo-selfplay"),
                                   config.hyper, config.width, config.width, seed);
      poam::train(trainer, config.iterations);
      const std::string id = "selfplay:" + trainer.spec().name + ":seed" + std::to_string(seed);
      PolicyHandle h;
      if (!config.out_dir.empty()) {
        std::filesystem::create_directories(config.out_dir);
        const auto path = config.out_dir / ("selfplay_seed" + std::to_string(seed) + ".ckpt");
        poam::save_nets(path, *trainer.nets(), "ippo-selfplay");
        h = poam::load_network_policy(path, id);
      } else {
        h = trainer.snapshot(id);
      }
      h.seed = seed;
      result.teams.push_back(std::move(h));
    } catch (const NonFiniteError& err) {
      result.failures.push_back({seed, err.what()});
    }
  }
  return result;
}

}  // namespace naht::teams
