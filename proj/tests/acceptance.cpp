// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Optional arguments select criteria by number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "naht/cli/commands.hpp"
#include "naht/env/bitgame.hpp"
#include "naht/env/pursuit.hpp"
#include "naht/eval/harness.hpp"
#include "naht/poam/trainer.hpp"
#include "naht/teams/sampling.hpp"
#include "naht/teams/scripted.hpp"
#include "naht/teams/selfplay.hpp"
#include "poam_fixture.hpp"

using namespace naht;
using teams::PolicyHandle;

namespace {

// ---------------------------------------------------------------- tolerances
constexpr double kLemmaSeconds = 1.0;
constexpr double kOptimaTol = 0.5;
constexpr double kOptimaSeconds = 60.0;
constexpr int kOptimaEpisodes = 10000;
constexpr double kPoamN2Min = 45.0;
constexpr double kPoamN1Lo = 32.0;
constexpr double kPoamN1Hi = 34.0;
constexpr double kAhtGap = 10.0;
constexpr double kGradTol = 1e-4;
constexpr int kGradProbes = 300;
constexpr int kSeedsNeeded = 2;  // of 3

// ---------------------------------------------------------------- desk-scale budgets
constexpr std::uint64_t kSeeds[] = {1, 2, 3};
constexpr int kBitWidth = 32;
constexpr int kBitBuffer = 64;
constexpr int kBitIterations = 1000;  // 1.6M env steps
constexpr int kBitEvalEpisodes = 2000;
constexpr int kPursuitWidth = 32;
constexpr int kPursuitBuffer = 32;
constexpr int kPursuitIterations = 400;  // 1.28M env steps
constexpr int kSelfplayIterations = 300;  // 0.96M env steps per team
constexpr int kXpEpisodes = 128;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<PolicyHandle> bitgame_u() { return {teams::bernoulli_policy(1.0 / 3.0)}; }

double mean_at_n(const PolicyHandle& c, int n, std::uint64_t seed) {
  const auto u = bitgame_u();
  return eval::mn_score(c, u, env::bitgame_factory(), kBitEvalEpisodes, seed, {n}).summary.mean;
}

poam::PpoHyper bit_hyper() {
  poam::PpoHyper h;
  h.buffer_episodes = kBitBuffer;
  return h;
}

struct BitRun {
  std::unique_ptr<poam::Trainer<float>> trainer;
  std::shared_ptr<const poam::PoamNets<float>> untrained;
  double n1 = 0.0, n2 = 0.0, mn = 0.0;
  double seconds = 0.0;
};

/// Bit-game runs shared by criteria 3, 7 and 8, trained on first use.
class BitRuns {
 public:
  const BitRun& get(const std::string& variant, std::uint64_t seed) {
    const auto key = variant + "/" + std::to_string(seed);
    auto it = runs_.find(key);
    if (it != runs_.end()) return it->second;
    BitRun r;
    const auto t0 = Clock::now();
    r.trainer = std::make_unique<poam::Trainer<float>>(env::bitgame_factory(), bitgame_u(),
                                                       poam::TrainVariant::preset(variant),
                                                       bit_hyper(), kBitWidth, kBitWidth, seed);
    r.untrained = std::make_shared<const poam::PoamNets<float>>(*r.trainer->nets());
    for (int i = 0; i < kBitIterations; ++i) r.trainer->iterate();
    const auto policy = r.trainer->snapshot(variant);
    r.n1 = mean_at_n(policy, 1, 1000 + seed);
    r.n2 = mean_at_n(policy, 2, 2000 + seed);
    r.mn = 0.5 * (r.n1 + r.n2);
    r.seconds = seconds_since(t0);
    std::printf("  [%s seed %llu] N=1 %s N=2 %s (%.0f s)\n", variant.c_str(),
                static_cast<unsigned long long>(seed), fmt(r.n1).c_str(), fmt(r.n2).c_str(),
                r.seconds);
    std::fflush(stdout);
    return runs_.emplace(key, std::move(r)).first->second;
  }

 private:
  std::map<std::string, BitRun> runs_;
};

BitRuns& bit_runs() {
  static BitRuns runs;
  return runs;
}

// ---------------------------------------------------------------- criteria

Outcome lemmas() {
  const auto t0 = Clock::now();
  std::ostringstream out;
  const int code = cli::cmd_lemmas(out);
  const double s = seconds_since(t0);
  const auto rows = cli::lemma_table();
  bool four_ninths = false, two_thirds = false, argmax = false, flat = false;
  for (const auto& r : rows) {
    if (r.quantity == "static_win_prob_M3_p1/3") four_ninths = std::abs(r.analytic - 4.0 / 9.0) < 1e-12;
    if (r.quantity == "asym_naht_win_prob_p1") two_thirds = std::abs(r.analytic - 2.0 / 3.0) < 1e-12;
    if (r.quantity == "shared_naht_argmax_p") argmax = std::abs(r.analytic - 1.0 / 3.0) < 1e-12;
    if (r.quantity == "aht_win_prob_grid_spread") flat = r.analytic < 1e-15 && r.brute_force < 1e-15;
  }
  const bool pass = code == cli::kExitOk && four_ninths && two_thirds && argmax && flat && s < kLemmaSeconds;
  return {pass, "exit " + std::to_string(code) + ", " + std::to_string(rows.size()) + " rows, " +
                    fmt(s, 4) + " s"};
}

Outcome optima() {
  const auto t0 = Clock::now();
  const auto u = bitgame_u();
  const auto one = eval::mn_score(teams::bernoulli_policy(1.0 / 3.0), u, env::bitgame_factory(),
                                  kOptimaEpisodes, 21, {1});
  const auto two = eval::mn_score(teams::asymmetric_bitgame_policy(), u, env::bitgame_factory(),
                                  kOptimaEpisodes, 22, {2});
  const double s = seconds_since(t0);
  const bool pass = std::abs(one.summary.mean - 100.0 / 3.0) <= kOptimaTol &&
                    std::abs(two.summary.mean - 50.0) <= kOptimaTol && s < kOptimaSeconds;
  return {pass, "N=1 " + fmt(one.summary.mean) + ", N=2 " + fmt(two.summary.mean) + ", " + fmt(s, 1) + " s"};
}

Outcome poam_bitgame() {
  double n1 = 0.0, n2 = 0.0, aht2 = 0.0;
  for (auto seed : kSeeds) {
    const auto& p = bit_runs().get("poam", seed);
    n1 += p.n1 / 3.0;
    n2 += p.n2 / 3.0;
  }
  for (auto seed : kSeeds) aht2 += bit_runs().get("poam-aht", seed).n2 / 3.0;
  const bool pass = n2 >= kPoamN2Min && n1 >= kPoamN1Lo && n1 <= kPoamN1Hi && aht2 <= n2 - kAhtGap;
  return {pass, "POAM N=2 " + fmt(n2) + ", N=1 " + fmt(n1) + "; POAM-AHT N=2 " + fmt(aht2) +
                    " (3-seed means)"};
}

Outcome gradients() {
  const auto r = test::composite_grad_checks(kGradProbes, 7);
  const double worst = std::max({r.ed, r.value, r.actor});
  char buf[160];
  std::snprintf(buf, sizeof(buf), "max rel error ed %.2e, value %.2e, actor %.2e over %d probes", r.ed,
                r.value, r.actor, r.probes);
  return {worst < kGradTol, buf};
}

Outcome flow() {
  std::vector<std::string> bad;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (auto& b : test::flow_and_mask_violations(seed)) bad.push_back(b);
  }
  std::string detail = bad.empty() ? "10 random batches, no violations" : bad.front();
  return {bad.empty(), detail};
}

double pursuit_auc(const std::string& variant, std::uint64_t seed) {
  const env::PursuitConfig cfg;
  poam::PpoHyper h;
  h.buffer_episodes = kPursuitBuffer;
  poam::Trainer<float> t(env::pursuit_factory(cfg), teams::scripted_pursuit_policies(cfg),
                         poam::TrainVariant::preset(variant), h, kPursuitWidth, kPursuitWidth, seed);
  const auto t0 = Clock::now();
  double sum = 0.0;
  for (int i = 0; i < kPursuitIterations; ++i) sum += t.iterate().mean_return;
  const double auc = sum / kPursuitIterations;
  std::printf("  [%s seed %llu] AUC %s (%.0f s)\n", variant.c_str(),
              static_cast<unsigned long long>(seed), fmt(auc).c_str(), seconds_since(t0));
  std::fflush(stdout);
  return auc;
}

Outcome ucd() {
  int wins = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    const double with = pursuit_auc("poam", seed);
    const double without = pursuit_auc("poam-no-ucd", seed);
    wins += with > without;
    detail += (detail.empty() ? "" : "; ") + fmt(with) + " vs " + fmt(without);
  }
  return {wins >= kSeedsNeeded, std::to_string(wins) + "/3 seeds (UCD vs no-UCD AUC: " + detail + ")"};
}

Outcome modeling() {
  int wins = 0;
  std::string detail;
  for (auto seed : kSeeds) {
    const double p = bit_runs().get("poam", seed).mn;
    const double i = bit_runs().get("ippo-naht", seed).mn;
    wins += p >= i;
    detail += (detail.empty() ? "" : "; ") + fmt(p) + " vs " + fmt(i);
  }
  return {wins >= kSeedsNeeded, std::to_string(wins) + "/3 seeds (POAM vs IPPO-NAHT M-N: " + detail + ")"};
}

Outcome ed_diag() {
  const auto& run = bit_runs().get("poam", kSeeds[0]);
  const auto& final_nets = *run.trainer->nets();
  const std::vector<eval::LabelledNets<float>> cks{{"untrained", run.untrained.get()},
                                                    {"final", &final_nets}};
  const auto rollout = run.trainer->snapshot("final");
  const auto u = bitgame_u();
  const auto pts = eval::within_episode_ed_diag<float>(cks, rollout, u, env::bitgame_factory(), 512, 31);
  std::map<int, double> fin, init;
  for (const auto& p : pts) {
    if (p.target != "all") continue;
    (p.checkpoint == "final" ? fin : init)[p.t] = p.act_prob;
  }
  const int horizon = env::BitGameConfig{}.horizon;
  const int quarter = horizon / 4;
  double first = 0.0, last = 0.0;
  for (int t = 0; t < quarter; ++t) first += fin[t] / quarter;
  for (int t = horizon - quarter; t < horizon; ++t) last += fin[t] / quarter;
  int above = 0;
  for (int t = 0; t < horizon; ++t) above += fin[t] > init[t];
  eval::write_ed_csv("acceptance_ed_diag.csv", pts);
  return {last > first && above == horizon,
          "act prob first quarter " + fmt(first) + ", last quarter " + fmt(last) + ", above untrained at " +
              std::to_string(above) + "/" + std::to_string(horizon) + " steps"};
}

bool csvs_reproducible() {
  const auto c = teams::bernoulli_policy(0.5);
  const auto u = bitgame_u();
  const std::vector<PolicyHandle> pair{teams::bernoulli_policy(0.2), teams::bernoulli_policy(0.7)};
  const std::vector<PolicyHandle> holdout{teams::bernoulli_policy(0.9)};
  const auto f = env::bitgame_factory();
  auto write_all = [&](const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    eval::write_mn_csv(dir / "mn_score.csv", eval::mn_score(c, u, f, 32, 5));
    eval::write_xp_csv(dir / "xp_matrix.csv", eval::crossplay_matrix(pair, f, 16, 5));
    eval::write_ood_csv(dir / "ood.csv", eval::ood_eval(c, pair, holdout, f, 16, 5));
    const auto curve = eval::varying_n_curve(c, u, f, 16, 5);
    eval::write_varyn_csv(dir / "varying_n.csv", curve);
    poam::PoamNets<double> nets(test::small_net_config(f()->spec()), 5);
    const std::vector<eval::LabelledNets<double>> cks{{"a", &nets}};
    const auto pts = eval::within_episode_ed_diag<double>(cks, c, u, f, 16, 5);
    eval::write_ed_csv(dir / "ed_diag.csv", pts);
  };
  write_all("acceptance_csv_a");
  write_all("acceptance_csv_b");
  for (const char* name : {"mn_score.csv", "xp_matrix.csv", "ood.csv", "varying_n.csv", "ed_diag.csv"}) {
    std::ifstream a(std::filesystem::path("acceptance_csv_a") / name);
    std::ifstream b(std::filesystem::path("acceptance_csv_b") / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    if (sa.str().empty() || sa.str() != sb.str()) return false;
  }
  return true;
}

Outcome protocol() {
  bool counts = true;
  for (int m : {2, 3, 4, 5}) {
    for (int e : {1, 2, 7}) {
      env::BitGameConfig cfg;
      cfg.num_agents = m;
      const auto s = eval::mn_score(teams::bernoulli_policy(0.5), bitgame_u(), env::bitgame_factory(cfg), e, 3);
      counts = counts && s.returns.size() == std::size_t((m - 1) * e);
    }
  }

  const env::PursuitConfig cfg;
  teams::SelfplayConfig sp;
  sp.iterations = kSelfplayIterations;
  sp.hyper.buffer_episodes = kPursuitBuffer;
  sp.width = kPursuitWidth;
  const auto t0 = Clock::now();
  const auto trained = teams::train_selfplay_teammates(env::pursuit_factory(cfg), "ippo", {11, 12, 13}, sp);
  const double train_s = seconds_since(t0);
  bool xp_ok = trained.teams.size() == 3;
  std::string xp_detail = "self-play training failed";
  if (xp_ok) {
    const auto m = eval::crossplay_matrix(trained.teams, env::pursuit_factory(cfg), kXpEpisodes, 41);
    eval::write_xp_csv("acceptance_xp_matrix.csv", m);
    xp_ok = m.self_mean() > m.cross_mean();
    double ci = 0.0;
    for (std::size_t i = 0; i < m.cells.size(); ++i) ci = std::max(ci, m.cells[i][i].ci95);
    xp_detail = "self-play " + fmt(m.self_mean()) + " vs cross-play " + fmt(m.cross_mean()) +
                " (largest diagonal ci95 " + fmt(ci) + ", " +
                fmt(train_s, 0) + " s training)";
  }
  const bool repro = csvs_reproducible();
  return {counts && xp_ok && repro, std::string("counts ") + (counts ? "exact" : "WRONG") + "; " + xp_detail +
                                        "; CSVs " + (repro ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"lemma suite", lemmas},
      {"matrix-game optima", optima},
      {"POAM bit-game training", poam_bitgame},
      {"gradient correctness", gradients},
      {"mask and flow invariants", flow},
      {"UCD ablation direction", ucd},
      {"agent-modeling direction", modeling},
      {"ED diagnostic property", ed_diag},
      {"evaluation protocol exactness", protocol},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = int(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d %s: %s (%s) [%.1f s]\n", id, criteria[k].first.c_str(), o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
