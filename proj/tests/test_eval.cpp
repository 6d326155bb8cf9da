#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "naht/env/bitgame.hpp"
#include "naht/env/pursuit.hpp"
#include "naht/error.hpp"
#include "naht/eval/harness.hpp"
#include "naht/poam/nets.hpp"
#include "naht/teams/policy.hpp"
#include "naht/teams/scripted.hpp"

using namespace naht;
using teams::PolicyHandle;

namespace {

// exactly-one-bit probability for three independent Bernoulli players, times 25 steps * 3
double bernoulli_team_return(double p) { return 75.0 * 3.0 * p * (1.0 - p) * (1.0 - p); }

/// Three agents whose observations never change.
class ConstantEnv : public env::Environment {
 public:
  ConstantEnv() {
    spec_ = {"constant", 3, 2, 2, 6};
    spec_.validate();
  }
  const env::EnvSpec& spec() const override { return spec_; }
  env::JointObs reset(Rng&) override {
    t_ = 0;
    return env::JointObs(3, kObs);
  }
  env::Transition step(std::span<const int> joint_action, Rng&) override {
    ++t_;
    env::Transition tr;
    tr.obs = env::JointObs(3, kObs);
    tr.actions.assign(joint_action.begin(), joint_action.end());
    tr.done = t_ >= spec_.horizon;
    tr.t = t_;
    return tr;
  }
  static inline const std::vector<double> kObs{0.5, -0.25};

 private:
  env::EnvSpec spec_;
  int t_ = 0;
};

env::EnvFactory constant_factory() {
  return [] { return std::make_unique<ConstantEnv>(); };
}

/// Sets the final decoder layers to constant outputs.
void fix_decoders(poam::PoamNets<double>& nets, const std::vector<double>& obs_out,
                  const std::vector<double>& act_logits) {
  auto& s = nets.store();
  const auto& od = nets.obs_decoder().dense().back();
  const auto& ad = nets.act_decoder().dense().back();
  s.value(od.weight()).fill(0.0);
  s.value(ad.weight()).fill(0.0);
  s.value(od.bias()).data.assign(obs_out.begin(), obs_out.end());
  s.value(ad.bias()).data.assign(act_logits.begin(), act_logits.end());
}

poam::NetConfig net_config(const env::EnvSpec& spec) {
  poam::NetConfig c;
  c.num_agents = spec.num_agents;
  c.obs_dim = spec.obs_dim;
  c.num_actions = spec.num_actions;
  c.width = 8;
  c.embed_dim = 4;
  c.env_fingerprint = spec.fingerprint();
  return c;
}

}  // namespace

TEST_SUITE("eval-harness") {

TEST_CASE("mn score returns (M-1)*E raw returns") {
  const auto c = teams::bernoulli_policy(0.5);
  const std::vector<PolicyHandle> U{teams::bernoulli_policy(1.0 / 3.0)};
  const auto s = eval::mn_score(c, U, env::bitgame_factory(), 2, 1);
  CHECK(s.returns.size() == 4);
  CHECK(s.summary.count == 4);
  CHECK(s.n == std::vector<int>{1, 1, 2, 2});
  for (int e : {1, 5, 9}) {
    env::BitGameConfig cfg;
    cfg.num_agents = 4;
    CHECK(eval::mn_score(c, U, env::bitgame_factory(cfg), e, 2).returns.size() == std::size_t(3 * e));
  }
  const auto again = eval::mn_score(c, U, env::bitgame_factory(), 2, 1);
  CHECK(again.returns == s.returns);
  CHECK(eval::mn_score(c, U, env::bitgame_factory(), 2, 2).returns != s.returns);
  CHECK_THROWS_AS(eval::mn_score(c, U, env::bitgame_factory(), 0, 1), ConfigError);
}

TEST_CASE("asymmetric pair with a Bernoulli third player scores 50 at N=2") {
  const auto pair = teams::asymmetric_bitgame_policy();
  const std::vector<PolicyHandle> U{teams::bernoulli_policy(1.0 / 3.0)};
  const auto s = eval::mn_score(pair, U, env::bitgame_factory(), 2000, 3, {2});
  CHECK(std::abs(s.summary.mean - 50.0) < s.summary.ci95 + 0.05);
}

TEST_CASE("summary confidence interval") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto s = eval::summarize(v);
  CHECK(s.mean == doctest::Approx(2.5));
  CHECK(s.ci95 == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(s.count == 4);
}

TEST_CASE("confidence intervals shrink as one over root E") {
  const auto c = teams::bernoulli_policy(0.5);
  const std::vector<PolicyHandle> U{teams::bernoulli_policy(1.0 / 3.0)};
  const auto small = eval::mn_score(c, U, env::bitgame_factory(), 300, 4);
  const auto big = eval::mn_score(c, U, env::bitgame_factory(), 1200, 5);
  const double ratio = small.summary.ci95 / big.summary.ci95;
  CHECK(std::abs(ratio / 2.0 - 1.0) < 0.2);
}

TEST_CASE("cross-play matrix shape and identical conventions") {
  const env::PursuitConfig cfg;
  auto a = teams::scripted_pursuit_policy(teams::Convention::kGreedyChaser, cfg);
  auto b = a;
  b.id = a.id + "-copy";
  const auto flank = teams::scripted_pursuit_policy(teams::Convention::kFlanker, cfg);
  const std::vector<PolicyHandle> three{a, b, flank};
  const auto xp = eval::crossplay_matrix(three, env::pursuit_factory(cfg), 60, 6);
  REQUIRE(xp.cells.size() == 3);
  for (const auto& row : xp.cells) CHECK(row.size() == 3);
  CHECK(xp.labels == std::vector<std::string>{a.id, b.id, flank.id});
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(xp.cells[i][j].mean == xp.cells[j][i].mean);
      if (i != j) pairs.insert({std::min(i, j), std::max(i, j)});
    }
  CHECK(pairs.size() == 3);
  const auto& self = xp.cells[0][0];
  const auto& cross = xp.cells[0][1];
  CHECK(std::abs(self.mean - cross.mean) < self.ci95 + cross.ci95);
  CHECK(xp.cells[1][1].count == 60);
  CHECK(cross.count == 120);
  const std::vector<PolicyHandle> one{a};
  CHECK_THROWS_AS(eval::crossplay_matrix(one, env::pursuit_factory(cfg), 2, 1), ConfigError);
}

TEST_CASE("linear seed pairings play each team against its ring neighbours") {
  std::vector<PolicyHandle> four;
  for (double p : {0.1, 0.3, 0.5, 0.7}) four.push_back(teams::bernoulli_policy(p));
  const auto full = eval::crossplay_matrix(four, env::bitgame_factory(), 4, 3);
  const auto ring = eval::crossplay_matrix(four, env::bitgame_factory(), 4, 3, true);
  int played = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      CHECK(full.cells[i][j].count > 0);
      if (ring.cells[i][j].count > 0) {
        ++played;
        CHECK(ring.cells[i][j].mean == full.cells[i][j].mean);
      }
    }
  CHECK(played == 4);
  CHECK(ring.cells[0][2].count == 0);
  CHECK(ring.self_mean() == full.self_mean());
  test::TempDir d("ring");
  eval::write_xp_csv(d / "xp.csv", ring);
  const auto csv = test::read_file(d / "xp.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 4 + 2 * 4);
}

TEST_CASE("varying-N endpoints are the self-play returns") {
  const auto c = teams::bernoulli_policy(0.5);
  const std::vector<PolicyHandle> U{teams::bernoulli_policy(0.1)};
  const auto curve = eval::varying_n_curve(c, U, env::bitgame_factory(), 1500, 7);
  REQUIRE(curve.size() == 4);
  for (int n = 0; n <= 3; ++n) CHECK(curve[std::size_t(n)].n == n);
  const auto& top = curve[3].summary;
  const auto& bottom = curve[0].summary;
  CHECK(std::abs(top.mean - bernoulli_team_return(0.5)) < 1.5 * top.ci95);
  CHECK(std::abs(bottom.mean - bernoulli_team_return(0.1)) < 1.5 * bottom.ci95);
  const auto self = eval::summarize(eval::selfplay_returns(c, env::bitgame_factory(), 1500, 8));
  CHECK(std::abs(self.mean - top.mean) < self.ci95 + top.ci95);

  // deterministic teams make both endpoints exact
  const auto ones = teams::constant_policy(1, "ones");
  const std::vector<PolicyHandle> zeros{teams::constant_policy(0, "zeros")};
  const auto exact = eval::varying_n_curve(ones, zeros, env::bitgame_factory(), 3, 9);
  CHECK(exact[0].summary.mean == 0.0);
  CHECK(exact[1].summary.mean == 75.0);
  CHECK(exact[3].summary.mean == eval::selfplay_returns(ones, env::bitgame_factory(), 3, 1)[0]);
}

TEST_CASE("ood report rows and overlap guard") {
  const auto c = teams::bernoulli_policy(0.5);
  std::vector<PolicyHandle> train{teams::bernoulli_policy(0.2), teams::bernoulli_policy(0.3)};
  std::vector<PolicyHandle> holdout{teams::bernoulli_policy(0.4)};
  const auto rep = eval::ood_eval(c, train, holdout, env::bitgame_factory(), 10, 1);
  CHECK(rep.rows.size() == 3);
  CHECK(rep.rows[2].split == "holdout");
  CHECK_THROWS_AS(eval::ood_eval(c, train, train, env::bitgame_factory(), 10, 1), ConfigError);
  auto tagged = holdout;
  tagged[0].tags = {"train"};
  CHECK_THROWS_AS(eval::ood_eval(c, train, tagged, env::bitgame_factory(), 10, 1), ConfigError);

  const auto same = eval::ood_eval(c, train, train, env::bitgame_factory(), 400, 2, true);
  CHECK(same.rows.size() == 4);
  CHECK(std::abs(same.in_distribution.mean - same.out_of_distribution.mean) <
        same.in_distribution.ci95 + same.out_of_distribution.ci95);
}

TEST_CASE("encoder-decoder diagnostics on fixed decoders") {
  const auto factory = constant_factory();
  const auto spec = factory()->spec();
  const auto ones = teams::constant_policy(1, "ones");
  const std::vector<PolicyHandle> U{teams::constant_policy(1, "mate")};

  poam::PoamNets<double> uniform(net_config(spec), 1);
  fix_decoders(uniform, std::vector<double>(4, 3.0), std::vector<double>(4, 0.0));
  poam::PoamNets<double> perfect(net_config(spec), 2);
  fix_decoders(perfect, {0.5, -0.25, 0.5, -0.25}, {-1000.0, 1000.0, -1000.0, 1000.0});
  poam::PoamNets<double> other(net_config(spec), 3);

  const std::vector<eval::LabelledNets<double>> cks{{"uniform", &uniform}, {"perfect", &perfect},
                                                     {"other", &other}};
  const auto pts = eval::within_episode_ed_diag<double>(cks, ones, U, factory, 8, 1);
  std::set<std::string> groups, targets;
  for (const auto& p : pts) {
    groups.insert(p.checkpoint);
    targets.insert(p.target);
    if (p.checkpoint == "uniform") {
      CHECK(p.act_prob == doctest::Approx(0.5).epsilon(1e-12));
      // (3 - 0.5)^2 and (3 + 0.25)^2 averaged over the two coordinates
      CHECK(p.obs_mse == doctest::Approx((6.25 + 10.5625) / 2.0).epsilon(1e-12));
    }
    if (p.checkpoint == "perfect") {
      CHECK(p.obs_mse == 0.0);
      CHECK(p.act_prob == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(groups.size() == 3);
  CHECK(targets == std::set<std::string>{"all", "controlled", "uncontrolled"});
  for (int t = 0; t < spec.horizon; ++t) {
    int per_t = 0;
    for (const auto& p : pts) per_t += p.checkpoint == "perfect" && p.t == t;
    CHECK(per_t == 3);
  }

  poam::NetConfig bad = net_config(spec);
  bad.env_fingerprint = "bitgame/other";
  poam::PoamNets<double> wrong(bad, 1);
  const std::vector<eval::LabelledNets<double>> w{{"wrong", &wrong}};
  CHECK_THROWS_AS(eval::within_episode_ed_diag<double>(w, ones, U, factory, 2, 1), ConfigError);
}

TEST_CASE("evaluation CSVs are byte-identical across calls") {
  test::TempDir d("evalcsv");
  const auto c = teams::bernoulli_policy(0.5);
  const std::vector<PolicyHandle> U{teams::bernoulli_policy(1.0 / 3.0), teams::bernoulli_policy(0.6)};
  for (const char* tag : {"a", "b"}) {
    const std::string s = tag;
    eval::write_mn_csv(d / ("mn_" + s + ".csv"), eval::mn_score(c, U, env::bitgame_factory(), 5, 3));
    eval::write_xp_csv(d / ("xp_" + s + ".csv"), eval::crossplay_matrix(U, env::bitgame_factory(), 5, 3));
    const auto curve = eval::varying_n_curve(c, U, env::bitgame_factory(), 5, 3);
    eval::write_varyn_csv(d / ("vn_" + s + ".csv"), curve);
    const std::vector<PolicyHandle> h{teams::bernoulli_policy(0.9)};
    eval::write_ood_csv(d / ("ood_" + s + ".csv"), eval::ood_eval(c, U, h, env::bitgame_factory(), 5, 3));
  }
  for (const char* f : {"mn", "xp", "vn", "ood"}) {
    const std::string s = f;
    CHECK(test::read_file(d / (s + "_a.csv")) == test::read_file(d / (s + "_b.csv")));
  }
  const auto mn = test::read_file(d / "mn_a.csv");
  CHECK(mn.rfind("N,episode,return\n", 0) == 0);
  CHECK(std::count(mn.begin(), mn.end(), '\n') == 1 + 2 * 5);
}

}  // TEST_SUITE
