#include "naht/cli/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "naht/error.hpp"
#include "naht/teams/registry.hpp"
#include "naht/teams/scripted.hpp"

namespace naht::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

/// Strict view of one JSON object: every key must be consumed.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + " must be a JSON object");
  }

  template <typename V>
  void read(const char* key, V& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<V>();
    } catch (const json::exception&) {
      throw ConfigError("key '" + full(key) + "' has the wrong type");
    }
  }

  std::optional<Fields> child(const char* key) {
    if (!j_.contains(key)) return std::nullopt;
    seen_.insert(key);
    return Fields(j_.at(key), full(key));
  }

  void finish() const {
    for (const auto& [k, _] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError("unknown key '" + full(k) + "'");
    }
  }

 private:
  std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_hyper(Fields& f, poam::PpoHyper& h) {
  f.read("buffer_episodes", h.buffer_episodes);
  f.read("epochs", h.epochs);
  f.read("minibatches", h.minibatches);
  f.read("entropy_coef", h.entropy_coef);
  f.read("clip", h.clip);
  f.read("gamma", h.gamma);
  f.read("lambda", h.lambda);
  f.read("lr", h.lr);
  f.read("max_grad_norm", h.max_grad_norm);
  f.read("ed_epochs", h.ed_epochs);
  f.read("ed_minibatches", h.ed_minibatches);
  f.read("ed_lr", h.ed_lr);
  f.read("embedding_rl_grad", h.embedding_rl_grad);
  f.finish();
}

void read_env(Fields& f, EnvConfig& e) {
  f.read("name", e.name);
  if (e.name != "bitgame" && e.name != "pursuit") {
    throw ConfigError("key 'env.name' must be bitgame or pursuit, got " + e.name);
  }
  if (auto p = f.child("params")) {
    if (e.name == "bitgame") {
      p->read("num_agents", e.bitgame.num_agents);
      p->read("horizon", e.bitgame.horizon);
      p->read("reward_scale", e.bitgame.reward_scale);
    } else {
      auto& c = e.pursuit;
      p->read("collision_radius", c.collision_radius);
      p->read("predator_max_speed", c.predator_max_speed);
      p->read("prey_max_speed", c.prey_max_speed);
      p->read("accel", c.accel);
      p->read("prey_accel", c.prey_accel);
      p->read("damping", c.damping);
      p->read("shaping", c.shaping);
      p->read("horizon", c.horizon);
      p->read("prey_sense_range", c.prey_sense_range);
      p->read("scripted_prey", c.scripted_prey);
    }
    p->finish();
  }
  f.finish();
  if (e.name == "pursuit") e.pursuit.validate();
  if (e.name == "bitgame" && (e.bitgame.num_agents < 2 || e.bitgame.horizon < 1)) {
    throw ConfigError("bitgame needs num_agents >= 2 and horizon >= 1");
  }
}

void validate(const RunConfig& c) {
  poam::TrainVariant::preset(c.variant);
  c.hyper.validate();
  if (c.embed_dim <= 0 || c.width <= 0) throw ConfigError("embed_dim and width must be positive");
  if (c.float_bits != 32 && c.float_bits != 64) throw ConfigError("float_bits must be 32 or 64");
  if (c.total_env_steps <= 0) throw ConfigError("total_env_steps must be positive");
  if (c.eval_episodes <= 0) throw ConfigError("eval_episodes must be positive");
  if (c.checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (!(c.bernoulli_p >= 0.0 && c.bernoulli_p <= 1.0)) throw ConfigError("bernoulli_p outside [0, 1]");
  if (!(c.scripted_noise >= 0.0 && c.scripted_noise <= 1.0)) {
    throw ConfigError("scripted_noise outside [0, 1]");
  }
}

int horizon(const EnvConfig& e) { return e.name == "bitgame" ? e.bitgame.horizon : e.pursuit.horizon; }

}  // namespace

env::EnvFactory EnvConfig::factory() const {
  if (name == "bitgame") return env::bitgame_factory(bitgame);
  if (name == "pursuit") return env::pursuit_factory(pursuit);
  throw ConfigError("unknown environment: " + name);
}

int RunConfig::iterations() const {
  const long per = long(hyper.buffer_episodes) * long(horizon(env));
  return int((total_env_steps + per - 1) / per);
}

RunConfig parse_run_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  Fields f(j, "");
  if (auto e = f.child("env")) read_env(*e, c.env);
  f.read("variant", c.variant);
  if (auto h = f.child("hyper")) read_hyper(*h, c.hyper);
  f.read("embed_dim", c.embed_dim);
  f.read("width", c.width);
  f.read("float_bits", c.float_bits);
  f.read("total_env_steps", c.total_env_steps);
  f.read("checkpoint_every", c.checkpoint_every);
  f.read("eval_episodes", c.eval_episodes);
  f.read("seeds", c.seeds);
  f.read("registry", c.registry);
  f.read("output_dir", c.output_dir);
  f.read("bernoulli_p", c.bernoulli_p);
  f.read("scripted_noise", c.scripted_noise);
  if (auto s = f.child("selfplay")) {
    s->read("train_seeds", c.selfplay.train_seeds);
    s->read("holdout_seeds", c.selfplay.holdout_seeds);
    s->read("env_steps", c.selfplay.env_steps);
    s->read("include_scripted", c.selfplay.include_scripted);
    s->finish();
  }
  f.finish();
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["env"]["name"] = c.env.name;
  if (c.env.name == "bitgame") {
    j["env"]["params"] = {{"num_agents", c.env.bitgame.num_agents},
                          {"horizon", c.env.bitgame.horizon},
                          {"reward_scale", c.env.bitgame.reward_scale}};
  } else {
    const auto& p = c.env.pursuit;
    ordered_json params;
    params["collision_radius"] = p.collision_radius;
    params["predator_max_speed"] = p.predator_max_speed;
    params["prey_max_speed"] = p.prey_max_speed;
    params["accel"] = p.accel;
    params["prey_accel"] = p.prey_accel;
    params["damping"] = p.damping;
    params["shaping"] = p.shaping;
    params["horizon"] = p.horizon;
    params["prey_sense_range"] = p.prey_sense_range;
    params["scripted_prey"] = p.scripted_prey;
    j["env"]["params"] = params;
  }
  j["variant"] = c.variant;
  const auto& h = c.hyper;
  ordered_json hy;
  hy["buffer_episodes"] = h.buffer_episodes;
  hy["epochs"] = h.epochs;
  hy["minibatches"] = h.minibatches;
  hy["entropy_coef"] = h.entropy_coef;
  hy["clip"] = h.clip;
  hy["gamma"] = h.gamma;
  hy["lambda"] = h.lambda;
  hy["lr"] = h.lr;
  hy["max_grad_norm"] = h.max_grad_norm;
  hy["ed_epochs"] = h.ed_epochs;
  hy["ed_minibatches"] = h.ed_minibatches;
  hy["ed_lr"] = h.ed_lr;
  hy["embedding_rl_grad"] = h.embedding_rl_grad;
  j["hyper"] = hy;
  j["embed_dim"] = c.embed_dim;
  j["width"] = c.width;
  j["float_bits"] = c.float_bits;
  j["total_env_steps"] = c.total_env_steps;
  j["checkpoint_every"] = c.checkpoint_every;
  j["eval_episodes"] = c.eval_episodes;
  j["seeds"] = c.seeds;
  j["registry"] = c.registry;
  j["output_dir"] = c.output_dir;
  j["bernoulli_p"] = c.bernoulli_p;
  j["scripted_noise"] = c.scripted_noise;
  j["selfplay"] = {{"train_seeds", c.selfplay.train_seeds},
                   {"holdout_seeds", c.selfplay.holdout_seeds},
                   {"env_steps", c.selfplay.env_steps},
                   {"include_scripted", c.selfplay.include_scripted}};
  return j.dump(2);
}

void apply_env_overrides(RunConfig& config, const EnvLookup& lookup) {
  if (auto seed = lookup("NAHT_SEED")) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(*seed);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        seeds.push_back(std::stoull(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError("NAHT_SEED must be a comma-separated list of integers");
      }
    }
    if (seeds.empty()) throw ConfigError("NAHT_SEED is empty");
    config.seeds = seeds;
  }
  if (auto out = lookup("NAHT_OUT_DIR")) config.output_dir = *out;
}

EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v) return std::nullopt;
    return std::string(v);
  };
}

std::vector<teams::PolicyHandle> uncontrolled_set(const RunConfig& config,
                                                  const std::string& tag) {
  if (!config.registry.empty()) {
    const auto reg = teams::Registry::load(config.registry, config.env.pursuit);
    std::vector<teams::PolicyHandle> out;
    for (const auto& h : reg.with_tag(tag)) {
      if (h.env.empty() || h.env == config.env.name ||
          h.env == config.env.factory()()->spec().fingerprint()) {
        out.push_back(h);
      }
    }
    return out;
  }
  if (tag != "train") return {};
  if (config.env.name == "bitgame") return {teams::bernoulli_policy(config.bernoulli_p)};
  return teams::scripted_pursuit_policies(config.env.pursuit, config.scripted_noise);
}

}  // namespace naht::cli
