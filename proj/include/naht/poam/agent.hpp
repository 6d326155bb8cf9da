#ifndef NAHT_POAM_AGENT_HPP_
#define NAHT_POAM_AGENT_HPP_

#include <filesystem>
#include <memory>
#include <string>

#include "naht/poam/nets.hpp"
#include "naht/teams/policy.hpp"

namespace naht::poam {

/// Acting side of PoamNets. Each controller carries its own encoder and actor
/// hidden state and previous action; all controllers share the parameters.
template <typename T>
class NetworkPolicy : public teams::PolicySource {
 public:
  NetworkPolicy(std::shared_ptr<const PoamNets<T>> nets, bool greedy = false)
      : nets_(std::move(nets)), greedy_(greedy) {}

  std::unique_ptr<teams::Controller> instantiate(const teams::SlotContext& ctx) const override;
  bool recurrent() const override { return true; }
  std::string env_fingerprint() const override { return nets_->config().env_fingerprint; }
  const PoamNets<T>& nets() const { return *nets_; }

 private:
  std::shared_ptr<const PoamNets<T>> nets_;
  bool greedy_;
};

template <typename T>
teams::PolicyHandle network_handle(std::shared_ptr<const PoamNets<T>> nets, std::string id,
                                   bool greedy = false);

/// Loads a saved network (parameters plus JSON sidecar) as a policy handle.
teams::PolicyHandle load_network_policy(const std::filesystem::path& checkpoint, std::string id,
                                        bool greedy = false);

extern template class NetworkPolicy<float>;
extern template class NetworkPolicy<double>;

}  // namespace naht::poam

#endif  // NAHT_POAM_AGENT_HPP_
