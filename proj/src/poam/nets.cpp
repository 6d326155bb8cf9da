#include "naht/poam/nets.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "naht/error.hpp"
#include "naht/nn/checkpoint.hpp"

namespace naht::poam {

using nn::Activation;
using nn::LayerSpec;

template <typename T>
PoamNets<T>::PoamNets(const NetConfig& config, std::uint64_t init_seed) : config_(config) {
  if (config.num_agents < 2 || config.obs_dim <= 0 || config.num_actions <= 0 ||
      config.width <= 0 || config.embed_dim <= 0) {
    throw ConfigError("invalid network configuration");
  }
  const int w = config.width;
  Rng rng = Rng(init_seed).split("init");
  if (config.agent_modeling) {
    encoder_ = nn::RecurrentNet<T>(
        store_, "enc", {encoder_input_dim(), {w, w}, w, config.embed_dim, Activation::kTanh});
    obs_decoder_ = nn::Mlp<T>(store_, "obs_dec", decoder_input_dim(),
                              {{w, true, Activation::kRelu},
                               {config.obs_dim, false, Activation::kNone}});
    act_decoder_ = nn::Mlp<T>(store_, "act_dec", decoder_input_dim(),
                              {{w, true, Activation::kRelu},
                               {config.num_actions, false, Activation::kNone}});
  }
  actor_ = nn::RecurrentNet<T>(store_, "actor",
                               {policy_input_dim(), {w, w}, w, config.num_actions,
                                Activation::kNone});
  critic_ = nn::RecurrentNet<T>(store_, "critic",
                                {policy_input_dim(), {w, w}, w, 1, Activation::kNone});

  const double relu_gain = std::sqrt(2.0);
  if (config.agent_modeling) {
    Rng r = rng.split("enc");
    nn::init_recurrent(store_, encoder_, 1.0, r);
    Rng ro = rng.split("obs_dec");
    nn::init_mlp(store_, obs_decoder_, relu_gain, ro);
    nn::init_orthogonal(store_.value(obs_decoder_.dense().back().weight()), 1.0, ro);
    Rng ra = rng.split("act_dec");
    nn::init_mlp(store_, act_decoder_, relu_gain, ra);
    nn::init_orthogonal(store_.value(act_decoder_.dense().back().weight()), 0.01, ra);
  }
  Rng rp = rng.split("actor");
  nn::init_recurrent(store_, actor_, 0.01, rp);
  Rng rc = rng.split("critic");
  nn::init_recurrent(store_, critic_, 1.0, rc);
}

template class PoamNets<float>;
template class PoamNets<double>;

std::filesystem::path meta_path(const std::filesystem::path& checkpoint) {
  return checkpoint.string() + ".json";
}

std::string net_config_to_json(const NetConfig& c, int float_bits, const std::string& variant) {
  nlohmann::ordered_json j;
  j["num_agents"] = c.num_agents;
  j["obs_dim"] = c.obs_dim;
  j["num_actions"] = c.num_actions;
  j["width"] = c.width;
  j["embed_dim"] = c.embed_dim;
  j["agent_modeling"] = c.agent_modeling;
  j["env_fingerprint"] = c.env_fingerprint;
  j["float_bits"] = float_bits;
  j["variant"] = variant;
  return j.dump(2);
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& checkpoint) {
  std::ifstream in(meta_path(checkpoint));
  if (!in) throw ConfigError("missing checkpoint metadata " + meta_path(checkpoint).string());
  nlohmann::json j;
  try {
    in >> j;
    CheckpointMeta m;
    m.net.num_agents = j.at("num_agents");
    m.net.obs_dim = j.at("obs_dim");
    m.net.num_actions = j.at("num_actions");
    m.net.width = j.at("width");
    m.net.embed_dim = j.at("embed_dim");
    m.net.agent_modeling = j.at("agent_modeling");
    m.net.env_fingerprint = j.at("env_fingerprint");
    m.float_bits = j.at("float_bits");
    m.variant = j.value("variant", "");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad checkpoint metadata " + meta_path(checkpoint).string() + ": " +
                      e.what());
  }
}

template <typename T>
void save_nets(const std::filesystem::path& path, const PoamNets<T>& nets,
               const std::string& variant) {
  nn::save_checkpoint(path, nets.store());
  std::ofstream out(meta_path(path));
  if (!out) throw ConfigError("cannot write " + meta_path(path).string());
  out << net_config_to_json(nets.config(), int(sizeof(T) * 8), variant) << "\n";
}

template <typename T>
std::shared_ptr<PoamNets<T>> load_nets(const std::filesystem::path& path) {
  const CheckpointMeta meta = read_checkpoint_meta(path);
  auto nets = std::make_shared<PoamNets<T>>(meta.net, 0);
  nn::load_checkpoint(path, nets->store());
  return nets;
}

template std::shared_ptr<PoamNets<float>> load_nets<float>(const std::filesystem::path&);
template std::shared_ptr<PoamNets<double>> load_nets<double>(const std::filesystem::path&);

template void save_nets<float>(const std::filesystem::path&, const PoamNets<float>&,
                               const std::string&);
template void save_nets<double>(const std::filesystem::path&, const PoamNets<double>&,
                                const std::string&);

}  // namespace naht::poam
