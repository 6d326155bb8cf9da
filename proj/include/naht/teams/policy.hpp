#ifndef NAHT_TEAMS_POLICY_HPP_
#define NAHT_TEAMS_POLICY_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "naht/rng.hpp"

namespace naht::teams {

enum class PolicyKind { kScripted, kBernoulli, kNetwork };

const char* to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);

/// What a policy instance learns about its seat when an episode starts.
struct SlotContext {
  int slot = 0;
  int num_agents = 0;
  /// Controlled-slot bits of the whole team. Only joint scripted policies
  /// (e.g. the asymmetric bit-game pair) may read this.
  std::vector<std::uint8_t> controlled_mask;
};

/// Per-episode, per-slot acting instance. Recurrent state lives here, so a
/// fresh controller per episode is a reset.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual int act(std::span<const double> obs, Rng& rng) = 0;
};

/// Shared, read-only policy definition that spawns controllers.
class PolicySource {
 public:
  virtual ~PolicySource() = default;
  virtual std::unique_ptr<Controller> instantiate(const SlotContext& ctx) const = 0;
  virtual bool recurrent() const { return false; }
  /// Environment fingerprint for network policies; empty when dimension-free.
  virtual std::string env_fingerprint() const { return {}; }
};

/// A member of U or C. For uncontrolled teams one handle describes the whole
/// team: instantiating it at slot k yields that team's k-th member.
struct PolicyHandle {
  std::string id;
  PolicyKind kind = PolicyKind::kScripted;
  std::optional<std::uint64_t> seed;
  std::string env;
  std::string checkpoint_path;
  std::vector<std::string> tags;
  std::shared_ptr<const PolicySource> source;

  bool recurrent() const { return source && source->recurrent(); }
  std::unique_ptr<Controller> instantiate(const SlotContext& ctx) const;
  bool has_tag(const std::string& tag) const;
};

/// Per-episode assignment of M slots to policies.
struct TeamSpec {
  std::vector<PolicyHandle> slots;
  std::vector<std::uint8_t> controlled_mask;
  int num_controlled = 0;
  /// Index of the uncontrolled team drawn from U, -1 when none.
  int uncontrolled_index = -1;

  int num_agents() const { return int(slots.size()); }
  std::string label() const;
};

/// Places `controlled` in the slots flagged by mask and `uncontrolled` elsewhere.
TeamSpec make_team(const PolicyHandle& controlled, const PolicyHandle* uncontrolled,
                   std::vector<std::uint8_t> mask, int uncontrolled_index = -1);

/// Bernoulli bit policy: emits 1 with probability p each step.
std::vector<PolicyHandle> make_bernoulli_team(double p, int size);
PolicyHandle bernoulli_policy(double p);

/// Joint bit-game policy: the lowest controlled slot always plays 1, every
/// other controlled slot plays 0.
PolicyHandle asymmetric_bitgame_policy();

/// Always plays a fixed action.
PolicyHandle constant_policy(int action, std::string id = {});

}  // namespace naht::teams

#endif  // NAHT_TEAMS_POLICY_HPP_
