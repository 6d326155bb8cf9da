#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "naht/env/bitgame.hpp"
#include "naht/error.hpp"
#include "naht/teams/policy.hpp"
#include "naht/teams/sampling.hpp"

using namespace naht;

namespace {

// Independent oracle: probability that exactly one of the bits is set,
// accumulated by dynamic programming over agents.
double exactly_one(const std::vector<double>& p) {
  double none = 1.0, one = 0.0;
  for (double q : p) {
    one = one * (1.0 - q) + none * q;
    none *= (1.0 - q);
  }
  return one;
}

double grid_argmax(const std::function<double(double)>& f) {
  double best = 0.0, best_v = -1.0;
  for (int k = 0; k <= 1000; ++k) {
    const double p = k / 1000.0;
    if (f(p) > best_v) best_v = f(p), best = p;
  }
  double lo = std::max(0.0, best - 1e-3), hi = std::min(1.0, best + 1e-3);
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (f(a) < f(b)) lo = a;
    else hi = b;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("env-bitgame") {

TEST_CASE("step rewards") {
  env::BitGameConfig cfg;
  auto state = env::bitgame_initial_state(cfg);
  CHECK(env::bitgame_step(cfg, state, std::vector<int>{1, 0, 0}).reward == 3.0);
  CHECK(env::bitgame_step(cfg, state, std::vector<int>{1, 1, 0}).reward == 0.0);
  CHECK(env::bitgame_step(cfg, state, std::vector<int>{0, 0, 0}).reward == 0.0);
  CHECK(env::bitgame_step(cfg, state, std::vector<int>{0, 0, 1}).reward == 3.0);
  CHECK(state.t == 4);
}

TEST_CASE("observations are agent one-hot then previous joint action") {
  env::BitGameConfig cfg;
  auto state = env::bitgame_initial_state(cfg);
  CHECK(env::bitgame_observe(cfg, state, 1) == std::vector<double>{0, 1, 0, 0, 0, 0});
  const auto tr = env::bitgame_step(cfg, state, std::vector<int>{1, 0, 1});
  CHECK(tr.obs[2] == std::vector<double>{0, 0, 1, 1, 0, 1});
  CHECK(tr.obs[0] == std::vector<double>{1, 0, 0, 1, 0, 1});
}

TEST_CASE("done exactly at step 25") {
  env::BitGameConfig cfg;
  auto state = env::bitgame_initial_state(cfg);
  for (int t = 0; t < 25; ++t) {
    const auto tr = env::bitgame_step(cfg, state, std::vector<int>{0, 1, 0});
    CHECK(tr.done == (t == 24));
  }
}

TEST_CASE("static win probability") {
  CHECK(env::static_win_prob(3, 1.0 / 3.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  for (int m = 1; m <= 6; ++m) CHECK(env::static_win_prob(m, 0.0) == 0.0);
  CHECK(env::static_win_prob(2, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("aht win probability is constant") {
  for (double p : {0.0, 1.0, 0.37}) CHECK(env::aht_win_prob(p) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  double lo = 1.0, hi = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double v = env::aht_win_prob(k / 100.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 1e-15);
}

TEST_CASE("shared naht win probability") {
  CHECK(env::shared_naht_win_prob(1.0 / 3.0) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(env::shared_naht_win_prob(1.0) == 0.0);
  CHECK(env::shared_naht_win_prob(0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const double arg = grid_argmax([](double p) { return env::shared_naht_win_prob(p); });
  CHECK(std::abs(arg - 1.0 / 3.0) < 1e-6);
}

TEST_CASE("asymmetric naht win probability") {
  CHECK(env::asym_naht_win_prob(1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(env::asym_naht_win_prob(0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(env::asym_naht_win_prob(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(env::asym_naht_win_prob(0.5) == doctest::Approx(exactly_one({0.0, 0.5, 1.0 / 3.0})).epsilon(1e-15));
}

TEST_CASE("brute force enumeration examples") {
  const std::vector<double> a{1.0 / 3, 1.0 / 3, 1.0 / 3}, b{1, 0, 0}, c{0, 1.0 / 3, 1};
  CHECK(env::brute_force_win_prob(a) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(env::brute_force_win_prob(b) == 1.0);
  CHECK(env::brute_force_win_prob(c) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS(env::brute_force_win_prob(std::vector<double>(21, 0.1)));
}

TEST_CASE("brute force agrees with the closed forms on random inputs") {
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 1 + int(rng.below(6));
    const double p = rng.uniform();
    std::vector<double> same(static_cast<std::size_t>(m), p);
    worst = std::max(worst, std::abs(env::brute_force_win_prob(same) - env::static_win_prob(m, p)));

    std::vector<double> mixed(static_cast<std::size_t>(m));
    for (auto& q : mixed) q = rng.uniform();
    worst = std::max(worst, std::abs(env::brute_force_win_prob(mixed) - exactly_one(mixed)));

    const std::vector<double> aht{p, 1.0 / 3, 1.0 / 3};
    worst = std::max(worst, std::abs(env::brute_force_win_prob(aht) - env::aht_win_prob(p)));
    const std::vector<double> shared{p, p, 1.0 / 3};
    worst = std::max(worst, std::abs(env::brute_force_win_prob(shared) - env::shared_naht_win_prob(p)));
    const std::vector<double> asym{0.0, p, 1.0 / 3};
    worst = std::max(worst, std::abs(env::brute_force_win_prob(asym) - env::asym_naht_win_prob(p)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("static optimum sits at one over M") {
  for (int m = 2; m <= 6; ++m) {
    const double arg = grid_argmax([m](double p) { return env::static_win_prob(m, p); });
    CHECK(std::abs(arg - 1.0 / m) < 1e-6);
  }
}

TEST_CASE("optimal expected returns over an episode") {
  env::BitGameConfig cfg;
  const double scale = cfg.horizon * cfg.reward_scale;
  CHECK(scale * env::aht_win_prob(0.5) == doctest::Approx(100.0 / 3.0).epsilon(1e-14));
  CHECK(scale * env::asym_naht_win_prob(1.0) == doctest::Approx(50.0).epsilon(1e-14));
}

TEST_CASE("asymmetric pair next to a Bernoulli teammate") {
  std::vector<teams::PolicyHandle> U{teams::bernoulli_policy(1.0 / 3.0)};
  const auto pair = teams::asymmetric_bitgame_policy();
  auto sampler = [&](std::size_t, Rng& rng) { return teams::sample_team_with_n(2, U, pair, 3, rng); };
  const auto batch = env::run_episodes(env::bitgame_factory(), sampler, 2000, 8);
  double sum = 0.0;
  for (std::size_t e = 0; e < batch.size(); ++e) sum += env::episode_return(batch, e);
  CHECK(sum / 2000.0 == doctest::Approx(50.0).epsilon(0.02));
}

}  // TEST_SUITE
