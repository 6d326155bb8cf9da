#ifndef NAHT_POAM_NETS_HPP_
#define NAHT_POAM_NETS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "naht/nn/layers.hpp"
#include "naht/nn/param_store.hpp"

namespace naht::poam {

struct NetConfig {
  int num_agents = 3;
  int obs_dim = 0;
  int num_actions = 0;
  int width = 64;
  int embed_dim = 64;
  bool agent_modeling = true;
  std::string env_fingerprint;

  bool operator==(const NetConfig&) const = default;
};

/// Parameter-group prefixes inside the shared store.
inline constexpr const char* kEncoderGroup = "enc.";
inline constexpr const char* kObsDecoderGroup = "obs_dec.";
inline constexpr const char* kActDecoderGroup = "act_dec.";
inline constexpr const char* kActorGroup = "actor.";
inline constexpr const char* kCriticGroup = "critic.";

/// POAM's five networks in one parameter store:
///   encoder      (o_t, onehot a_{t-1}) -> fc -> fc -> GRU -> tanh head -> e_t
///   obs decoder  (e_t, onehot teammate k) -> fc -> predicted o_k
///   act decoder  (e_t, onehot teammate k) -> fc -> logits over a_k
///   actor        (o_t, e_t, onehot slot) -> fc -> fc -> GRU -> logits
///   critic       (o_t, e_t, onehot slot) -> fc -> fc -> GRU -> value
/// Decoders share parameters across teammates; the teammate index is an input.
/// Without agent modeling only the actor and critic exist and e_t is dropped.
template <typename T>
class PoamNets {
 public:
  PoamNets(const NetConfig& config, std::uint64_t init_seed);

  const NetConfig& config() const { return config_; }
  nn::ParamStore<T>& store() { return store_; }
  const nn::ParamStore<T>& store() const { return store_; }

  const nn::RecurrentNet<T>& encoder() const { return encoder_; }
  const nn::Mlp<T>& obs_decoder() const { return obs_decoder_; }
  const nn::Mlp<T>& act_decoder() const { return act_decoder_; }
  const nn::RecurrentNet<T>& actor() const { return actor_; }
  const nn::RecurrentNet<T>& critic() const { return critic_; }

  bool modeling() const { return config_.agent_modeling; }
  int num_mates() const { return config_.num_agents - 1; }
  int encoder_input_dim() const { return config_.obs_dim + config_.num_actions; }
  int decoder_input_dim() const { return config_.embed_dim + num_mates(); }
  int policy_input_dim() const {
    return config_.obs_dim + (modeling() ? config_.embed_dim : 0) + config_.num_agents;
  }

 private:
  NetConfig config_;
  nn::ParamStore<T> store_;
  nn::RecurrentNet<T> encoder_;
  nn::Mlp<T> obs_decoder_;
  nn::Mlp<T> act_decoder_;
  nn::RecurrentNet<T> actor_;
  nn::RecurrentNet<T> critic_;
};

std::string net_config_to_json(const NetConfig& config, int float_bits, const std::string& variant);
struct CheckpointMeta {
  NetConfig net;
  int float_bits = 32;
  std::string variant;
};
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& checkpoint);
std::filesystem::path meta_path(const std::filesystem::path& checkpoint);

/// Writes the parameter file plus its JSON sidecar (network shape, float
/// width, variant).
template <typename T>
void save_nets(const std::filesystem::path& path, const PoamNets<T>& nets,
               const std::string& variant);

/// Rebuilds networks from a saved file and its sidecar; values convert to T.
template <typename T>
std::shared_ptr<PoamNets<T>> load_nets(const std::filesystem::path& path);

extern template class PoamNets<float>;
extern template class PoamNets<double>;

}  // namespace naht::poam

#endif  // NAHT_POAM_NETS_HPP_
