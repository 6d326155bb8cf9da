#ifndef NAHT_POAM_TRAINER_HPP_
#define NAHT_POAM_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "naht/env/env.hpp"
#include "naht/poam/nets.hpp"
#include "naht/teams/policy.hpp"
#include "naht/teams/sampling.hpp"

namespace naht::poam {

struct TrainVariant {
  std::string name = "poam";
  bool use_agent_modeling = true;
  teams::SamplingMode sampling = teams::SamplingMode::kNahtUniform;
  bool critic_uses_uncontrolled_data = true;

  /// "poam", "ippo-naht", "poam-aht", "poam-no-ucd" or "ippo-selfplay".
  static TrainVariant preset(const std::string& name);
};

struct PpoHyper {
  int buffer_episodes = 256;
  int epochs = 4;
  int minibatches = 3;
  double entropy_coef = 0.05;
  double clip = 0.1;
  double gamma = 0.99;
  double lambda = 0.95;
  double lr = 5e-4;
  double max_grad_norm = 10.0;
  int ed_epochs = 1;
  int ed_minibatches = 1;
  double ed_lr = 5e-4;
  /// Lets actor and critic gradients reach the encoder.
  bool embedding_rl_grad = false;

  void validate() const;
};

struct IterationMetrics {
  int iteration = 0;
  long env_steps = 0;
  double mean_return = 0.0;
  std::optional<double> ed_obs_mse;
  std::optional<double> ed_act_nll;
  double value_loss = 0.0;
  double actor_loss = 0.0;
  double entropy = 0.0;
  double actor_grad_norm = 0.0;
  double critic_grad_norm = 0.0;
  double ed_grad_norm = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const IterationMetrics& m);

/// Everything the update phase derives from one buffer, exposed for tests.
struct BufferStats {
  std::vector<double> values;      // StepTable layout
  std::vector<double> targets;
  std::vector<double> advantages;  // normalized over controlled valid steps
  std::vector<double> old_logp;
  std::vector<std::uint8_t> controlled_valid;
};

template <typename T>
class Trainer {
 public:
  Trainer(env::EnvFactory factory, std::vector<teams::PolicyHandle> uncontrolled,
          TrainVariant variant, PpoHyper hyper, int width, int embed_dim, std::uint64_t seed);

  /// Collect one buffer, then update. Throws NonFiniteError on divergence.
  IterationMetrics iterate();

  env::EpisodeBatch collect();
  IterationMetrics update(const env::EpisodeBatch& batch);
  BufferStats buffer_stats(const env::EpisodeBatch& batch) const;

  const env::EnvSpec& spec() const { return spec_; }
  const TrainVariant& variant() const { return variant_; }
  const PpoHyper& hyper() const { return hyper_; }
  int iteration() const { return iteration_; }
  long env_steps() const { return env_steps_; }
  std::shared_ptr<PoamNets<T>> nets() { return nets_; }
  std::shared_ptr<const PoamNets<T>> nets() const { return nets_; }
  /// Handle bound to the live parameters.
  const teams::PolicyHandle& policy() const { return policy_; }
  /// Handle bound to a frozen copy of the current parameters.
  teams::PolicyHandle snapshot(const std::string& id, bool greedy = false) const;

 private:
  env::EnvFactory factory_;
  env::EnvSpec spec_;
  std::vector<teams::PolicyHandle> uncontrolled_;
  TrainVariant variant_;
  PpoHyper hyper_;
  std::uint64_t seed_;
  std::shared_ptr<PoamNets<T>> nets_;
  teams::PolicyHandle policy_;
  int iteration_ = 0;
  long env_steps_ = 0;
};

/// Runs `iterations` updates, appending metrics to `metrics_csv` when given
/// and saving the networks to `checkpoint_dir` every `checkpoint_every`
/// iterations (and after the last one).
template <typename T>
std::vector<IterationMetrics> train(Trainer<T>& trainer, int iterations,
                                    const std::filesystem::path& metrics_csv = {},
                                    const std::filesystem::path& checkpoint_dir = {},
                                    int checkpoint_every = 0);

extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace naht::poam

#endif  // NAHT_POAM_TRAINER_HPP_
