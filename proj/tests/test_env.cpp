#include <doctest.h>

#include "helpers.hpp"
#include "naht/env/bitgame.hpp"
#include "naht/env/env.hpp"
#include "naht/env/pursuit.hpp"
#include "naht/error.hpp"
#include "naht/nn/checkpoint.hpp"
#include "naht/teams/policy.hpp"
#include "naht/teams/sampling.hpp"
#include "naht/teams/scripted.hpp"

using namespace naht;

namespace {

teams::TeamSpec full_team(const teams::PolicyHandle& h, int m) {
  return teams::make_team(h, nullptr, std::vector<std::uint8_t>(std::size_t(m), 1));
}

class WrongEnvSource : public teams::PolicySource {
 public:
  std::unique_ptr<teams::Controller> instantiate(const teams::SlotContext&) const override {
    return nullptr;
  }
  std::string env_fingerprint() const override { return "pursuit/3/12/5/100"; }
};

bool same_batch(const env::EpisodeBatch& a, const env::EpisodeBatch& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t e = 0; e < a.size(); ++e) {
    const auto& x = a.episode(e);
    const auto& y = b.episode(e);
    if (x.length != y.length || x.obs != y.obs || x.actions != y.actions || x.rewards != y.rewards ||
        x.dones != y.dones || x.controlled != y.controlled) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("env-core") {

TEST_CASE("bitgame episode has 25 steps") {
  const auto team = full_team(teams::bernoulli_policy(1.0 / 3.0), 3);
  const auto batch = env::run_episodes(env::bitgame_factory(), team, 1, 7);
  REQUIRE(batch.size() == 1);
  CHECK(batch.episode(0).length == 25);
  CHECK(batch.episode(0).dones.back() == 1);
  CHECK(batch.total_steps() == 25);
}

TEST_CASE("pursuit episode is at most 100 steps") {
  const auto team = full_team(teams::scripted_pursuit_policy(teams::Convention::kGreedyChaser), 3);
  const auto batch = env::run_episodes(env::pursuit_factory(), team, 3, 7);
  for (const auto& ep : batch.episodes()) {
    CHECK(ep.length <= 100);
    CHECK(ep.length >= 1);
  }
}

TEST_CASE("same seed gives identical batches") {
  const auto u = teams::bernoulli_policy(0.4);
  const auto c = teams::bernoulli_policy(0.7);
  std::vector<teams::PolicyHandle> U{u};
  auto sampler = [&](std::size_t, Rng& rng) {
    return teams::sample_team(teams::SamplingScheme{}, U, c, 3, rng);
  };
  const auto a = env::run_episodes(env::bitgame_factory(), sampler, 20, 99);
  const auto b = env::run_episodes(env::bitgame_factory(), sampler, 20, 99);
  const auto d = env::run_episodes(env::bitgame_factory(), sampler, 20, 100);
  CHECK(same_batch(a, b));
  CHECK_FALSE(same_batch(a, d));
}

TEST_CASE("episode substreams do not depend on the episode count") {
  const auto team = full_team(teams::scripted_pursuit_policy(teams::Convention::kFlanker, {}, 0.3), 3);
  const auto five = env::run_episodes(env::pursuit_factory(), team, 5, 4);
  const auto two = env::run_episodes(env::pursuit_factory(), team, 2, 4);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(five.episode(e).obs == two.episode(e).obs);
    CHECK(five.episode(e).actions == two.episode(e).actions);
  }
}

TEST_CASE("episode return is the undiscounted reward sum") {
  env::EnvSpec spec{"toy", 2, 1, 2, 3};
  env::EpisodeBatch batch(spec, 0.5);
  env::EpisodeRecord r;
  r.length = 3;
  r.rewards = {1, 0, 1};
  batch.append(r);
  r.rewards = {0, 0, 0};
  batch.append(r);
  CHECK(env::episode_return(batch, 0) == 2.0);
  CHECK(env::episode_return(batch, 1) == 0.0);

  const auto team = full_team(teams::asymmetric_bitgame_policy(), 3);
  const auto played = env::run_episodes(env::bitgame_factory(), team, 1, 1);
  CHECK(env::episode_return(played, 0) == 75.0);
}

TEST_CASE("teammate targets are the other agents' observations in slot order") {
  const auto c = teams::scripted_pursuit_policy(teams::Convention::kInterceptor, {}, 0.2);
  const auto u = teams::scripted_pursuit_policies({}, 0.2);
  auto sampler = [&](std::size_t, Rng& rng) {
    return teams::sample_team(teams::SamplingScheme{}, u, c, 3, rng);
  };
  const auto batch = env::run_episodes(env::pursuit_factory(), sampler, 4, 12);
  for (std::size_t e = 0; e < batch.size(); ++e) {
    for (int t = 0; t < batch.episode(e).length; t += 7) {
      for (int i = 0; i < 3; ++i) {
        std::vector<double> expect;
        std::vector<int> expect_actions;
        for (int j = 0; j < 3; ++j) {
          if (j == i) continue;
          const auto o = batch.obs(e, t, j);
          expect.insert(expect.end(), o.begin(), o.end());
          expect_actions.push_back(batch.action(e, t, j));
        }
        CHECK(batch.teammate_obs(e, t, i) == expect);
        CHECK(batch.teammate_actions(e, t, i) == expect_actions);
      }
    }
  }
  CHECK(batch.teammate_slots(1) == std::vector<int>{0, 2});
}

TEST_CASE("controlled bits per episode equal N") {
  const auto c = teams::bernoulli_policy(0.5);
  std::vector<teams::PolicyHandle> U{teams::bernoulli_policy(0.2), teams::bernoulli_policy(0.9)};
  auto sampler = [&](std::size_t, Rng& rng) {
    return teams::sample_team(teams::SamplingScheme{}, U, c, 3, rng);
  };
  const auto batch = env::run_episodes(env::bitgame_factory(), sampler, 200, 3);
  for (const auto& ep : batch.episodes()) {
    int bits = 0;
    for (auto b : ep.controlled) bits += b;
    CHECK(bits == ep.num_controlled);
    CHECK(bits >= 1);
    CHECK(bits <= 2);
  }
}

TEST_CASE("dimension mismatches are configuration errors") {
  const auto bad_size = teams::make_team(teams::bernoulli_policy(0.5), nullptr, {1, 1});
  CHECK_THROWS_AS(env::run_episodes(env::bitgame_factory(), bad_size, 1, 1), ConfigError);

  teams::PolicyHandle wrong;
  wrong.id = "wrong-env";
  wrong.kind = teams::PolicyKind::kNetwork;
  wrong.source = std::make_shared<WrongEnvSource>();
  CHECK_THROWS_AS(env::run_episodes(env::bitgame_factory(), full_team(wrong, 3), 1, 1), ConfigError);

  const auto out_of_range = full_team(teams::constant_policy(4), 3);
  CHECK_THROWS_AS(env::run_episodes(env::bitgame_factory(), out_of_range, 1, 1), ConfigError);
}

TEST_CASE("episode batch serializes to the checkpoint container") {
  test::TempDir dir("batch");
  const auto team = full_team(teams::bernoulli_policy(0.5), 3);
  const auto batch = env::run_episodes(env::bitgame_factory(), team, 2, 5);
  env::save_episode_batch(dir / "b.ckpt", batch);
  const auto data = nn::read_checkpoint(dir / "b.ckpt");
  CHECK_FALSE(data.entries.empty());
}

}  // TEST_SUITE
