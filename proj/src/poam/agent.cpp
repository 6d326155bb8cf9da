#include "naht/poam/agent.hpp"

#include "naht/error.hpp"
#include "naht/nn/categorical.hpp"
#include "naht/nn/checkpoint.hpp"

namespace naht::poam {
namespace {

template <typename T>
class NetworkController : public teams::Controller {
 public:
  NetworkController(const PoamNets<T>& nets, int slot, bool greedy)
      : nets_(nets), slot_(slot), greedy_(greedy) {
    const auto& c = nets.config();
    if (nets.modeling()) enc_h_ = nn::Mat<T>::Zero(1, nets.encoder().spec().hidden);
    act_h_ = nn::Mat<T>::Zero(1, nets.actor().spec().hidden);
    if (slot < 0 || slot >= c.num_agents) throw ConfigError("slot outside the network's team");
  }

  int act(std::span<const double> obs, Rng& rng) override {
    const auto& c = nets_.config();
    if (obs.size() != std::size_t(c.obs_dim)) {
      throw ConfigError("observation width " + std::to_string(obs.size()) +
                        " does not match network input " + std::to_string(c.obs_dim));
    }
    const auto& store = nets_.store();
    nn::Mat<T> x = nn::Mat<T>::Zero(1, nets_.policy_input_dim());
    for (int k = 0; k < c.obs_dim; ++k) x(0, k) = T(obs[std::size_t(k)]);
    if (nets_.modeling()) {
      nn::Mat<T> ex = nn::Mat<T>::Zero(1, nets_.encoder_input_dim());
      for (int k = 0; k < c.obs_dim; ++k) ex(0, k) = T(obs[std::size_t(k)]);
      if (prev_action_ >= 0) ex(0, c.obs_dim + prev_action_) = T(1);
      const nn::Mat<T> e = nets_.encoder().step(store, ex, enc_h_);
      x.block(0, c.obs_dim, 1, c.embed_dim) = e;
    }
    x(0, nets_.policy_input_dim() - c.num_agents + slot_) = T(1);
    const nn::Mat<T> logits = nets_.actor().step(store, x, act_h_);
    const std::span<const T> row(logits.data(), std::size_t(logits.cols()));
    const int a = greedy_ ? nn::argmax<T>(row) : nn::sample_categorical<T>(row, rng);
    prev_action_ = a;
    return a;
  }

 private:
  const PoamNets<T>& nets_;
  int slot_;
  bool greedy_;
  nn::Mat<T> enc_h_;
  nn::Mat<T> act_h_;
  int prev_action_ = -1;
};

}  // namespace

template <typename T>
std::unique_ptr<teams::Controller> NetworkPolicy<T>::instantiate(
    const teams::SlotContext& ctx) const {
  return std::make_unique<NetworkController<T>>(*nets_, ctx.slot, greedy_);
}

template <typename T>
teams::PolicyHandle network_handle(std::shared_ptr<const PoamNets<T>> nets, std::string id,
                                   bool greedy) {
  teams::PolicyHandle h;
  h.id = std::move(id);
  h.kind = teams::PolicyKind::kNetwork;
  h.env = nets->config().env_fingerprint;
  h.source = std::make_shared<NetworkPolicy<T>>(std::move(nets), greedy);
  return h;
}

template <typename T>
teams::PolicyHandle load_as(const std::filesystem::path& checkpoint, const CheckpointMeta& meta,
                            std::string id, bool greedy) {
  auto nets = std::make_shared<PoamNets<T>>(meta.net, 0);
  nn::load_checkpoint(checkpoint, nets->store());
  auto h = network_handle<T>(std::move(nets), std::move(id), greedy);
  h.checkpoint_path = checkpoint.string();
  return h;
}

teams::PolicyHandle load_network_policy(const std::filesystem::path& checkpoint, std::string id,
                                        bool greedy) {
  const CheckpointMeta meta = read_checkpoint_meta(checkpoint);
  if (meta.float_bits == 64) return load_as<double>(checkpoint, meta, std::move(id), greedy);
  return load_as<float>(checkpoint, meta, std::move(id), greedy);
}

template class NetworkPolicy<float>;
template class NetworkPolicy<double>;
template teams::PolicyHandle network_handle<float>(std::shared_ptr<const PoamNets<float>>,
                                                   std::string, bool);
template teams::PolicyHandle network_handle<double>(std::shared_ptr<const PoamNets<double>>,
                                                    std::string, bool);

}  // namespace naht::poam
