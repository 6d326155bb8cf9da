#ifndef NAHT_POAM_LOSSES_HPP_
#define NAHT_POAM_LOSSES_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "naht/poam/nets.hpp"
#include "naht/poam/seq_batch.hpp"

namespace naht::poam {

// ---- Plain loss arithmetic ----

/// Per-step modeling loss: sum of squared observation errors over all
/// teammates minus the summed log-probability of their actions. `logits`
/// holds one block of `num_actions` per teammate.
double ed_step_loss(std::span<const double> predicted_obs, std::span<const double> target_obs,
                    std::span<const double> logits, std::span<const int> actions,
                    int num_actions);

/// Lambda-returns for one trajectory. values has rewards.size() + 1 entries;
/// a done step bootstraps from nothing.
std::vector<double> td_lambda_targets(std::span<const double> values,
                                      std::span<const double> rewards,
                                      std::span<const std::uint8_t> dones, double gamma,
                                      double lambda);

/// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A).
double clipped_surrogate(double ratio, double advantage, double clip);

/// Mean of -surrogate minus entropy_coef times mean entropy.
double ppo_objective(std::span<const double> logp_new, std::span<const double> logp_old,
                     std::span<const double> advantages, std::span<const double> entropy,
                     double clip, double entropy_coef);

/// Mean of 0.5 (v - target)^2 over masked entries; ArgumentError when empty.
double masked_value_loss(std::span<const double> values, std::span<const double> targets,
                         std::span<const std::uint8_t> mask);

/// Normalizes masked entries to mean 0 and unit (population) std in place.
void normalize_advantages(std::vector<double>& adv, std::span<const std::uint8_t> mask);

// ---- Network losses over a SeqBatch ----
// Row masks select trajectories (one entry per batch row); padded steps never
// count. Embedding inputs are passed explicitly so the caller decides whether
// they are detached (d_emb == nullptr) or receive gradient.

template <typename T>
nn::Mat<T> encoder_inputs(const SeqBatch<T>& b);

/// Embeddings for every step of the batch, no gradient.
template <typename T>
nn::Mat<T> compute_embeddings(const PoamNets<T>& nets, const SeqBatch<T>& b);

/// [obs, emb, onehot slot]; emb is skipped without agent modeling.
template <typename T>
nn::Mat<T> policy_inputs(const PoamNets<T>& nets, const SeqBatch<T>& b, const nn::Mat<T>* emb);

struct EdLoss {
  double loss = 0.0;
  double obs_mse = 0.0;  // mean per-step squared error summed over teammates
  double act_nll = 0.0;  // mean per-step NLL summed over teammates
  long count = 0;
};

/// Modeling loss over the masked rows; accumulates encoder and decoder
/// gradients when backprop is set.
template <typename T>
EdLoss ed_loss(PoamNets<T>& nets, const SeqBatch<T>& b, std::span<const std::uint8_t> row_mask,
               bool backprop);

/// Per teammate prediction quality for every step: squared observation error
/// and probability assigned to the taken action, laid out like mate_action.
template <typename T>
struct EdDiagnostics {
  std::vector<double> obs_sq_error;
  std::vector<double> act_prob;
};
template <typename T>
EdDiagnostics<T> ed_diagnostics(const PoamNets<T>& nets, const SeqBatch<T>& b);

struct PolicyOutputs {
  std::vector<double> logp;     // log-prob of the recorded action
  std::vector<double> entropy;
  std::vector<double> value;
};

/// Forward only; value is filled when with_value is set.
template <typename T>
PolicyOutputs evaluate_policy(const PoamNets<T>& nets, const SeqBatch<T>& b,
                              const nn::Mat<T>* emb, bool with_value);

struct ActorLoss {
  double loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  long count = 0;
};

template <typename T>
ActorLoss actor_loss(PoamNets<T>& nets, const SeqBatch<T>& b, const nn::Mat<T>* emb,
                     std::span<const double> advantages, std::span<const double> old_logp,
                     std::span<const std::uint8_t> row_mask, double clip, double entropy_coef,
                     bool backprop, nn::Mat<T>* d_emb = nullptr);

struct ValueLoss {
  double loss = 0.0;
  long count = 0;
};

/// ArgumentError when the mask selects no valid step.
template <typename T>
ValueLoss value_loss(PoamNets<T>& nets, const SeqBatch<T>& b, const nn::Mat<T>* emb,
                     std::span<const double> targets, std::span<const std::uint8_t> row_mask,
                     bool backprop, nn::Mat<T>* d_emb = nullptr);

}  // namespace naht::poam

#endif  // NAHT_POAM_LOSSES_HPP_
