#include "naht/teams/policy.hpp"

#include <algorithm>
#include <cstdio>

#include "naht/error.hpp"

namespace naht::teams {
namespace {

class BernoulliController : public Controller {
 public:
  explicit BernoulliController(double p) : p_(p) {}
  int act(std::span<const double>, Rng& rng) override { return rng.bernoulli(p_) ? 1 : 0; }

 private:
  double p_;
};

class BernoulliSource : public PolicySource {
 public:
  explicit BernoulliSource(double p) : p_(p) {}
  std::unique_ptr<Controller> instantiate(const SlotContext&) const override {
    return std::make_unique<BernoulliController>(p_);
  }

 private:
  double p_;
};

class ConstantController : public Controller {
 public:
  explicit ConstantController(int a) : a_(a) {}
  int act(std::span<const double>, Rng&) override { return a_; }

 private:
  int a_;
};

class ConstantSource : public PolicySource {
 public:
  explicit ConstantSource(int a) : a_(a) {}
  std::unique_ptr<Controller> instantiate(const SlotContext&) const override {
    return std::make_unique<ConstantController>(a_);
  }

 private:
  int a_;
};

class AsymmetricSource : public PolicySource {
 public:
  std::unique_ptr<Controller> instantiate(const SlotContext& ctx) const override {
    const auto& mask = ctx.controlled_mask;
    int first = ctx.slot;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (mask[k] != 0) {
        first = int(k);
        break;
      }
    }
    return std::make_unique<ConstantController>(first == ctx.slot ? 1 : 0);
  }
};

}  // namespace

const char* to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kScripted: return "scripted";
    case PolicyKind::kBernoulli: return "bernoulli";
    case PolicyKind::kNetwork: return "network";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  if (s == "scripted") return PolicyKind::kScripted;
  if (s == "bernoulli") return PolicyKind::kBernoulli;
  if (s == "network") return PolicyKind::kNetwork;
  throw ConfigError("unknown policy kind: " + s);
}

std::unique_ptr<Controller> PolicyHandle::instantiate(const SlotContext& ctx) const {
  if (!source) throw ConfigError("policy " + id + " has no source");
  return source->instantiate(ctx);
}

bool PolicyHandle::has_tag(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::string TeamSpec::label() const {
  std::string s;
  for (std::size_t k = 0; k < slots.size(); ++k) {
    if (k != 0) s += '|';
    s += controlled_mask[k] != 0 ? "C:" : "U:";
    s += slots[k].id;
  }
  return s;
}

TeamSpec make_team(const PolicyHandle& controlled, const PolicyHandle* uncontrolled,
                   std::vector<std::uint8_t> mask, int uncontrolled_index) {
  TeamSpec team;
  team.controlled_mask = std::move(mask);
  team.uncontrolled_index = uncontrolled_index;
  for (std::uint8_t bit : team.controlled_mask) {
    if (bit != 0) {
      team.slots.push_back(controlled);
      ++team.num_controlled;
    } else {
      if (uncontrolled == nullptr) throw ConfigError("team needs an uncontrolled policy");
      team.slots.push_back(*uncontrolled);
    }
  }
  return team;
}

PolicyHandle bernoulli_policy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw ArgumentError("bernoulli p must lie in [0, 1]");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "bernoulli:%.6g", p);
  PolicyHandle h;
  h.id = buf;
  h.kind = PolicyKind::kBernoulli;
  h.env = "bitgame";
  h.source = std::make_shared<BernoulliSource>(p);
  return h;
}

std::vector<PolicyHandle> make_bernoulli_team(double p, int size) {
  std::vector<PolicyHandle> out;
  const PolicyHandle h = bernoulli_policy(p);
  for (int i = 0; i < size; ++i) out.push_back(h);
  return out;
}

PolicyHandle asymmetric_bitgame_policy() {
  PolicyHandle h;
  h.id = "bitgame-asymmetric";
  h.kind = PolicyKind::kScripted;
  h.env = "bitgame";
  h.source = std::make_shared<AsymmetricSource>();
  return h;
}

PolicyHandle constant_policy(int action, std::string id) {
  PolicyHandle h;
  h.id = id.empty() ? "constant:" + std::to_string(action) : std::move(id);
  h.kind = PolicyKind::kScripted;
  h.source = std::make_shared<ConstantSource>(action);
  return h;
}

}  // namespace naht::teams
